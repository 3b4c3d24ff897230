import numpy as np

from inhand import rngstream as rs


def test_repeatable():
    a = rs.uniforms(7, np.arange(16), rs.TAG_DISTURB, 3, 4)
    b = rs.uniforms(7, np.arange(16), rs.TAG_DISTURB, 3, 4)
    assert np.array_equal(a, b)


def test_schedule_independent():
    # an env's draws do not depend on which neighbours are in the batch
    full = rs.uniforms(7, np.arange(16), rs.TAG_RESET, 0, 3)
    solo = rs.uniforms(7, np.array([5]), rs.TAG_RESET, 0, 3)
    chunk = rs.uniforms(7, np.arange(4, 9), rs.TAG_RESET, 0, 3)
    assert np.array_equal(full[5], solo[0])
    assert np.array_equal(full[4:9], chunk)


def test_streams_distinct():
    by_tag = rs.uniforms(7, np.arange(8), rs.TAG_RESET, 0, 2)
    other_tag = rs.uniforms(7, np.arange(8), rs.TAG_DISTURB, 0, 2)
    other_step = rs.uniforms(7, np.arange(8), rs.TAG_RESET, 1, 2)
    other_seed = rs.uniforms(8, np.arange(8), rs.TAG_RESET, 0, 2)
    assert not np.array_equal(by_tag, other_tag)
    assert not np.array_equal(by_tag, other_step)
    assert not np.array_equal(by_tag, other_seed)


def test_widening_count_keeps_prefix():
    narrow = rs.uniforms(1, np.arange(4), rs.TAG_OBS_NOISE, 2, 3)
    wide = rs.uniforms(1, np.arange(4), rs.TAG_OBS_NOISE, 2, 8)
    assert np.array_equal(narrow, wide[:, :3])


def test_uniform_statistics():
    u = rs.uniforms(0, np.arange(2000), rs.TAG_GRASP, 0, 8)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.01
    assert abs(u.var() - 1.0 / 12.0) < 0.005


def test_randints_range():
    ints = rs.randints(3, np.arange(5000), rs.TAG_GRASP, 1, 7)
    assert ints.min() == 0 and ints.max() == 6
    counts = np.bincount(ints, minlength=7)
    assert counts.min() > 5000 / 7 * 0.8
