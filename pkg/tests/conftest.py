"""Shared fixtures and synthetic-instance helpers."""

import numpy as np
import pytest

from esemsim.network import NetworkConfig
from esemsim.scheduling import DIRECT_T1, DIRECT_T2, RELAY_PAIR, Smc, SmcGroup


@pytest.fixture(scope="session")
def cfg():
    return NetworkConfig()


def make_group(direct1=(), direct2=(), relays=(), cell=0, group_id=0):
    """Synthetic finalized group from bare stream gains.

    direct1/direct2: iterables of power gains; relays: (m, w_br, w_ru)
    triples. No matrices are attached; only the solver-facing fields are
    populated.
    """
    members = []
    group = SmcGroup(cell=cell, id=group_id, members=members)
    for w in direct1:
        idx = len(members)
        members.append(Smc(cell=cell, kind=DIRECT_T1, ue=idx))
        group.ph1_members.append(idx)
        group.gain_t1[idx] = float(w)
    for w in direct2:
        idx = len(members)
        members.append(Smc(cell=cell, kind=DIRECT_T2, ue=idx))
        group.ph2_bs_members.append(idx)
        group.gain_t2[idx] = float(w)
    for m, w1, w2 in relays:
        idx = len(members)
        members.append(Smc(cell=cell, kind=RELAY_PAIR, ue=idx, rn=m))
        group.ph1_members.append(idx)
        group.rn_members.setdefault(m, []).append(idx)
        group.gain_t1[idx] = float(w1)
        group.gain_t2[idx] = float(w2)
    return group


def random_group(rng, cfg, n_streams=3, allow_relay=True, cell=0, group_id=0):
    """Random synthetic group with realistic gain magnitudes."""
    direct1, direct2, relays = [], [], []
    budget = n_streams
    if allow_relay and rng.random() < 0.5 and budget >= 1:
        m = int(rng.integers(cfg.m_relays))
        relays.append((m, _gain(rng), _gain(rng)))
        budget -= 1
    while budget > 0:
        if rng.random() < 0.5:
            direct1.append(_gain(rng))
        else:
            direct2.append(_gain(rng))
        budget -= 1
    return make_group(direct1, direct2, relays, cell=cell, group_id=group_id)


def _gain(rng):
    return 10.0 ** rng.uniform(-12.5, -10.5)
