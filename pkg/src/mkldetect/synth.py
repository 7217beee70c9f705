"""Deterministic synthetic packet traces.

Normal traffic is low-fanout request/response exchanges between a small
client pool and a few servers. The attack phase adds many single-target
sources flooding one victim on dispersed ports without ever receiving a
reply, which is what drives the half-interaction features up. All draws
come from one PCG64 generator, so a profile and seed fully determine the
trace.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .packets import PacketRecord

SERVICE_PORTS = (80, 443, 8080, 53)


@dataclass(frozen=True)
class SynthProfile:
    """Shape of a generated trace; rates are per second."""

    duration: float = 120.0
    n_normal_hosts: int = 12
    n_servers: int = 3
    n_attackers: int = 40
    attack_start: float = 60.0
    attack_ramp: float = 0.0
    normal_flows_per_sec: float = 6.0
    normal_reply_prob: float = 0.9
    attack_pps_per_source: float = 8.0
    victim: str = "victim"

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.n_normal_hosts < 1 or self.n_servers < 1:
            raise ValueError("need at least one client and one server")
        if self.n_attackers < 0:
            raise ValueError("n_attackers must be non-negative")
        if not 0 <= self.attack_start:
            raise ValueError("attack_start must be non-negative")
        if self.attack_ramp < 0:
            raise ValueError("attack_ramp must be non-negative")


def synth_traffic(profile: SynthProfile, seed: int) -> list[PacketRecord]:
    """Generate a packet list sorted by time, all timestamps in [0, duration)."""
    rng = np.random.default_rng(seed)
    packets: list[PacketRecord] = []

    n_flows = int(rng.poisson(profile.normal_flows_per_sec * profile.duration))
    for _ in range(n_flows):
        t = float(rng.uniform(0.0, profile.duration))
        client = f"h{int(rng.integers(profile.n_normal_hosts)):03d}"
        server = f"srv{int(rng.integers(profile.n_servers))}"
        service = SERVICE_PORTS[int(rng.integers(len(SERVICE_PORTS)))]
        client_port = int(rng.integers(1024, 65536))
        for _ in range(int(rng.integers(1, 5))):
            packets.append(PacketRecord(t, client, server, client_port, service,
                                        int(rng.integers(80, 1200)), "TCP"))
            t += float(rng.exponential(0.01))
        if rng.random() < profile.normal_reply_prob:
            for _ in range(int(rng.integers(1, 4))):
                packets.append(PacketRecord(t, server, client, service, client_port,
                                            int(rng.integers(80, 1500)), "TCP"))
                t += float(rng.exponential(0.01))

    if profile.n_attackers > 0 and profile.attack_start < profile.duration:
        span = profile.duration - profile.attack_start
        for a in range(profile.n_attackers):
            src = f"atk{a:03d}"
            count = int(rng.poisson(profile.attack_pps_per_source * span))
            times = np.sort(rng.uniform(profile.attack_start, profile.duration, size=count))
            for t in times:
                if profile.attack_ramp > 0:
                    ramp = min(1.0, (t - profile.attack_start) / profile.attack_ramp)
                    if rng.random() > ramp:
                        continue
                packets.append(PacketRecord(float(t), src, profile.victim,
                                            int(rng.integers(1024, 65536)),
                                            int(rng.integers(1, 65536)),
                                            int(rng.integers(40, 120)), "TCP"))

    packets = [p for p in packets if p.time < profile.duration]
    packets.sort(key=lambda p: p.time)
    return packets
