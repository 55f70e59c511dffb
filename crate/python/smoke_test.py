"""Smoke test for the `ixy` extension module."""
import math

import ixy


def main():
    p = ixy.ModelParams(1024, 1, 1.5, 0.3, -0.7)
    assert p.n == 1024 and p.anisotropy == "non-hermitian"

    f = ixy.dynamical_qfi(p, 1.0)
    assert f > 0.0
    assert ixy.dynamical_qfi(p, 0.0) == 0.0
    modes = ixy.mode_qfis(p, 1.0)
    assert len(modes) == 512
    assert math.isclose(sum(modes), f, rel_tol=1e-10)

    ep = ixy.find_exceptional_point(p.replace(gamma=0.5))
    assert abs(ep.h_e + math.sqrt(1.25)) < 1e-8, ep

    ts = [0.1 * 1.1**k for k in range(15)]
    fit = ixy.fit_power_law(ts, [3.0 * t**2 for t in ts])
    assert abs(fit.slope - 2.0) < 1e-10, fit

    small = p.replace(n=6)
    dense = ixy.dense_evolve_qfi(small, 1.0)
    assert math.isclose(dense, ixy.dynamical_qfi(small, 1.0), rel_tol=1e-8)

    s = ixy.stationary_qfi(p.replace(h=-1.5))
    assert s.value > 0.0 and s.straddled_modes == 0

    assert ixy.classify_phase(p) == "broken"
    assert ixy.classify_phase(p.replace(h=-3.0)) == "unbroken"
    assert ixy.critical_field_zero() == -1.0

    try:
        ixy.ModelParams(7, 1, 1.5, 0.3, -0.7)
    except ValueError:
        pass
    else:
        raise AssertionError("odd N accepted")
    print("smoke test passed:", p, "F(t=1) =", f)


if __name__ == "__main__":
    main()
