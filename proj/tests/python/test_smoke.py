import struct

import pytest

import chaostrng


def test_prototype_config_is_clean():
    cfg = chaostrng.prototype_config()
    report = chaostrng.validate_config(cfg)
    assert report["ok"]
    assert report["advisories"] == []
    assert chaostrng.markov_bounds(cfg) == (1, 5)


def test_illustrative_states():
    cfg = chaostrng.illustrative_config()
    assert [chaostrng.state_from_code(cfg, m) for m in (1, 2, 3, 4, 5)] == [3, 0, 1, 2, 3]
    alpha, beta = chaostrng.map_params(cfg)
    assert alpha == 4
    assert chaostrng.iterate_map(alpha, beta, 0.28) == pytest.approx(0.4)


def test_invalid_offset_raises():
    cfg = chaostrng.illustrative_config()
    cfg.v_b = 1.3
    with pytest.raises(ValueError):
        chaostrng.markov_bounds(cfg)


def test_trajectory_is_seeded():
    cfg = chaostrng.prototype_config()
    a = chaostrng.run_trajectory(cfg, chaostrng.NonIdealities.defaults(cfg, 7), 100)
    b = chaostrng.run_trajectory(cfg, chaostrng.NonIdealities.defaults(cfg, 7), 100)
    assert a == b
    assert all(1 <= rec[3] <= 5 for rec in a)


def test_generate_and_nist_subset():
    cfg = chaostrng.prototype_config()
    data = chaostrng.generate_bytes(cfg, chaostrng.NonIdealities.defaults(cfg, 3), 70000, "vn")
    assert len(data) == 70000
    reports = chaostrng.nist_subset(data)
    assert len(reports) == 9
    assert all(0.0 <= r["p_value"] <= 1.0 for r in reports)


def test_tamper_check_flags_injection():
    cfg = chaostrng.prototype_config()
    ni = chaostrng.NonIdealities.defaults(cfg, 5)
    assert chaostrng.tamper_check(cfg, ni, 5000)["flags"] == 0
    assert chaostrng.tamper_check(cfg, ni, 5000, 0.1)["flags"] & 4


def test_frames_and_crc():
    assert chaostrng.crc16_ccitt_false(b"123456789") == 0x29B1
    assert chaostrng.encode_frame(2, b"") == bytes([0x7E, 0x02, 0x00, 0x00, 0xA2, 0xFC])
    assert chaostrng.decode_frame(chaostrng.encode_frame(3, b"\x01\x02")) == (3, b"\x01\x02")
    with pytest.raises(ValueError):
        chaostrng.decode_frame(b"\x7e\x02\x00\x00\x00\x00")


def test_virtual_device():
    dev = chaostrng.VirtualDevice("seed = 11\n")
    cmd, payload = dev.handle(1, struct.pack("<H", 32))
    assert cmd == 1 and len(payload) == 32
    dev.inject_random_codes(0.1)
    assert dev.handle(1, struct.pack("<H", 32)) == (0xFF, b"\x03")
    assert dev.tamper_flags & 4
