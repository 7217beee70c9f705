import math

import numpy as np
import pytest

from conftest import make_packet, make_window
from mkldetect import (PacketCsvError, PacketRecord, build_partition,
                       distinct_ports, partition_stream, read_packet_csv,
                       write_packet_csv)


def test_empty_stream_gives_no_windows():
    assert partition_stream([], 1.0) == []


def test_window_boundaries_left_closed_right_open():
    pkts = [make_packet(0.1, "a", "b"), make_packet(0.9, "a", "b"), make_packet(1.2, "c", "b")]
    windows = partition_stream(pkts, 1.0)
    assert [w.start for w in windows] == [0.0, 1.0]
    assert [len(w.packets) for w in windows] == [2, 1]
    assert windows[0].packets[0].time == 0.1


def test_packet_exactly_on_boundary_goes_to_next_window():
    windows = partition_stream([make_packet(1.0, "a", "b"), make_packet(0.5, "a", "b")], 1.0)
    assert [len(w.packets) for w in windows] == [1, 1]


def test_window_counting_matches_histogram_oracle(rng):
    times = rng.uniform(0, 10, 1000)
    pkts = [make_packet(float(t), "a", "b") for t in times]
    windows = partition_stream(pkts, 1.0)
    counts, _ = np.histogram(times, bins=np.arange(0, 11.0))
    assert len(windows) == 10
    assert [len(w.packets) for w in windows] == counts.tolist()
    assert sum(len(w.packets) for w in windows) == 1000


def test_empty_windows_between_populated_ones_are_emitted():
    windows = partition_stream([make_packet(0.5, "a", "b"), make_packet(3.5, "a", "b")], 1.0)
    assert [w.start for w in windows] == [0.0, 1.0, 2.0, 3.0]
    assert [len(w.packets) for w in windows] == [1, 0, 0, 1]


def test_windows_align_to_delta_multiples():
    windows = partition_stream([make_packet(7.3, "a", "b")], 2.0)
    assert windows[0].start == 6.0


def test_non_finite_times_are_dropped_with_diagnostic(caplog):
    pkts = [make_packet(float("nan"), "a", "b"), make_packet(0.2, "a", "b")]
    with caplog.at_level("WARNING"):
        windows = partition_stream(pkts, 1.0)
    assert [len(w.packets) for w in windows] == [1]
    assert any("non-finite" in r.message for r in caplog.records)


def test_unsorted_input_is_sorted_stably():
    first = make_packet(0.5, "a", "b", dst_port=1)
    second = make_packet(0.5, "a", "b", dst_port=2)
    windows = partition_stream([first, second], 1.0)
    assert windows[0].packets == [first, second]


def test_partition_single_one_way_flow():
    part = build_partition(make_window(make_packet(0.1, "A", "B")))
    assert list(part.ips) == ["A"]
    assert list(part.ipd) == ["B"]
    assert list(part.sh) == ["A"]
    assert list(part.dh) == ["B"]
    assert part.if_flows == {}


def test_partition_full_interaction():
    part = build_partition(make_window(make_packet(0.1, "A", "B"), make_packet(0.2, "B", "A")))
    assert list(part.if_flows) == ["A", "B"]
    assert part.sh == {} and part.dh == {}


def test_partition_mixed_membership():
    part = build_partition(make_window(
        make_packet(0.1, "A", "B"), make_packet(0.2, "B", "A"), make_packet(0.3, "C", "B")))
    assert list(part.if_flows) == ["A", "B"]
    assert list(part.sh) == ["C"]
    assert part.dh == {}  # B receives from C but B is also a source


def test_partition_completeness_and_trichotomy(rng):
    from oracles import random_window
    for _ in range(50):
        window = random_window(rng)
        part = build_partition(window)
        sd_total = sum(len(v) for v in part.sd.values())
        assert sd_total == len(window.packets)
        assert sum(len(v) for v in part.ips.values()) == len(window.packets)
        assert sum(len(v) for v in part.ipd.values()) == len(window.packets)
        for addr in set(part.ips) | set(part.ipd):
            roles = (addr in part.sh, addr in part.dh, addr in part.if_flows)
            assert sum(roles) == 1
        for addr in part.sh:
            assert addr in part.ips and addr not in part.ipd
        for addr in part.dh:
            assert addr in part.ipd and addr not in part.ips
        for addr in part.if_flows:
            assert addr in part.ips and addr in part.ipd


def test_partition_key_order_is_canonical():
    part = build_partition(make_window(
        make_packet(0.1, "zz", "b"), make_packet(0.2, "aa", "b")))
    assert list(part.sd) == [("aa", "b"), ("zz", "b")]
    assert list(part.ips) == ["aa", "zz"]


def test_distinct_ports():
    assert distinct_ports([]) == 0
    pkts = [make_packet(0.1, "a", "b", dst_port=80), make_packet(0.2, "a", "b", dst_port=80),
            make_packet(0.3, "a", "b", dst_port=443)]
    assert distinct_ports(pkts) == 2
    many = [make_packet(0.1, "a", "b", dst_port=i % 7) for i in range(100)]
    assert distinct_ports(many) == 7


def test_packet_csv_round_trip(tmp_path):
    pkts = [make_packet(0.125, "a", "b", dst_port=80), make_packet(1.5, "c", "d", dst_port=53)]
    path = tmp_path / "packets.csv"
    write_packet_csv(path, pkts)
    back, issues = read_packet_csv(path)
    assert back == pkts
    assert issues == []


def test_packet_csv_missing_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("0.1,a,b,1,2,3,TCP\n")
    with pytest.raises(PacketCsvError) as err:
        read_packet_csv(path)
    assert err.value.line == 1


def test_packet_csv_lenient_skips_bad_lines(tmp_path):
    path = tmp_path / "mixed.csv"
    path.write_text(
        "time,src_ip,dst_ip,src_port,dst_port,size,proto\n"
        "0.1,a,b,1,2,3,TCP\n"
        "oops,a,b,1,2,3,TCP\n"
        "0.3,,b,1,2,3,TCP\n"
        "0.4,a,b,1,2,3,TCP\n")
    pkts, issues = read_packet_csv(path, strict=False)
    assert [p.time for p in pkts] == [0.1, 0.4]
    assert [i.line for i in issues] == [3, 4]


def test_packet_csv_strict_aborts_on_bad_line(tmp_path):
    path = tmp_path / "mixed.csv"
    path.write_text(
        "time,src_ip,dst_ip,src_port,dst_port,size,proto\n"
        "nan,a,b,1,2,3,TCP\n")
    with pytest.raises(PacketCsvError) as err:
        read_packet_csv(path, strict=True)
    assert err.value.line == 2


def test_packet_csv_rejects_out_of_range_port(tmp_path):
    path = tmp_path / "port.csv"
    path.write_text(
        "time,src_ip,dst_ip,src_port,dst_port,size,proto\n"
        "0.1,a,b,1,70000,3,TCP\n")
    _, issues = read_packet_csv(path)
    assert len(issues) == 1


def test_delta_t_must_be_positive():
    with pytest.raises(ValueError):
        partition_stream([make_packet(0.1, "a", "b")], 0.0)
