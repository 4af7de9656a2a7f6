import numpy as np
import pytest

from interlaced_control import (Explicit, classify_poles, fixtures, make_plan,
                                partial_fraction)


@pytest.fixture(scope="session")
def cd_parallel():
    return partial_fraction(fixtures.load_cd())


@pytest.fixture(scope="session")
def av_plan(cd_parallel):
    part = classify_poles(cd_parallel, Explicit(["b1", "b2", "b3"]))
    return make_plan(cd_parallel, part)


def random_stable_tf(rng, order, dt=None, proper=True):
    """Random stable simple-pole SISO transfer function for round-trip and
    recombination tests."""
    from interlaced_control import TransferFunction

    while True:
        if dt is None:
            poles = -0.2 - 3.0 * rng.random(order) \
                + 1j * rng.standard_normal(order)
        else:
            r = 0.15 + 0.8 * rng.random(order)
            th = np.pi * rng.random(order)
            poles = r * np.exp(1j * th)
        # conjugate-pair half of them, keep the rest real
        out = []
        i = 0
        while i < order:
            if i + 1 < order and rng.random() < 0.5:
                out += [poles[i], np.conj(poles[i])]
                i += 2
            else:
                out.append(complex(poles[i].real))
                i += 1
        poles = np.array(out)
        if np.min(np.abs(poles[:, None] - poles[None, :])
                  + np.eye(order)) > 1e-3:
            break
    nzero = rng.integers(0, order) if proper else order
    zeros = rng.standard_normal(nzero) * (0.5 if dt else 2.0)
    num = np.poly(zeros) * (0.5 + rng.random())
    den = np.real(np.poly(poles))
    return TransferFunction(num, den, dt)
