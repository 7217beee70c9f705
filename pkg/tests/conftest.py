import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mkldetect import FlowWindow, PacketRecord


def make_packet(t, src, dst, dst_port=80, src_port=1024, size=100, proto="TCP"):
    return PacketRecord(t, src, dst, src_port, dst_port, size, proto)


def make_window(*pkts, start=0.0, delta_t=1.0):
    return FlowWindow(start=start, delta_t=delta_t, packets=list(pkts))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def blob_data():
    """Separable 5-dimensional two-class set, labels +1 normal / -1 attack."""
    gen = np.random.default_rng(3)
    normal = gen.normal(0.25, 0.1, (20, 5))
    attack = gen.normal(0.75, 0.1, (20, 5))
    X = np.vstack([normal, attack])
    y = np.array([1] * 20 + [-1] * 20)
    return X, y
