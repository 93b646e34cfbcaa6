import pytest

from cacheleak.cacheconfig import CacheConfig, Policy, format_size, parse_cache_spec, parse_size


def test_parse_direct_mapped():
    c = parse_cache_spec("512B/32B/1")
    assert (c.sets_log2, c.line_log2, c.assoc, c.policy) == (4, 5, 1, Policy.DIRECT_MAPPED)
    assert c.size == 512


def test_parse_lru():
    c = parse_cache_spec("1KB/32B/2:lru")
    assert (c.num_sets, c.line_size, c.assoc, c.policy) == (16, 32, 2, Policy.LRU)
    assert parse_cache_spec("2KB/16B/4").policy is Policy.LRU
    assert parse_cache_spec("512B/32B/1:lru").policy is Policy.LRU


@pytest.mark.parametrize("bad", ["512B/32B", "500B/32B/1", "512B/24B/1", "512B/32B/1:fifo",
                                 "512B/32B/x", "96B/32B/1"])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        parse_cache_spec(bad)


def test_direct_mapped_requires_assoc_one():
    with pytest.raises(ValueError):
        CacheConfig(4, 5, 2, Policy.DIRECT_MAPPED)


def test_set_and_tag_of_concrete_addresses():
    c = CacheConfig(4, 5)
    assert (c.set_of(0x200), c.tag_of(0x200)) == (0, 1)
    assert (c.set_of(0), c.tag_of(0)) == (0, 0)
    assert c.tag_of(0x1FF) == 0


def test_sizes_round_trip():
    assert parse_size("1KB") == 1024 and parse_size("32b") == 32
    assert format_size(1024) == "1KB" and format_size(48) == "48B"
    c = parse_cache_spec("2KB/16B/4")
    assert parse_cache_spec(c.to_spec()) == c
    assert "S=5" in c.describe()


def test_check_width():
    with pytest.raises(ValueError):
        CacheConfig(4, 5).check_width(8)
