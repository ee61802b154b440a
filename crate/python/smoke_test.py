"""Quick end-to-end check of the Python bindings.

Build first:  pip install --no-build-isolation -e crates/python
"""

import math
from fractions import Fraction

import orbit_energy as oe


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name} {detail}".rstrip())
    if not ok:
        raise SystemExit(1)


def main():
    d = 5
    check("wg identity p=2", oe.weingarten([1, 1], d) == Fraction(1, d * d - 1))
    check("wg transposition p=2", oe.weingarten([2], d) == Fraction(-1, d * (d * d - 1)))

    table = oe.weingarten_table(4, 6)
    check("table covers classes", sorted(table) == sorted(tuple(c) for c in oe.partitions(4)))
    sizes = {(1, 1, 1, 1): 1, (2, 1, 1): 6, (2, 2): 3, (3, 1): 8, (4,): 6}
    weighted = sum(sizes[c] * v for c, v in table.items())
    check("class sum", weighted == Fraction(math.factorial(5), math.factorial(9)), str(weighted))

    try:
        oe.weingarten_table(5, 3)
    except oe.UnsupportedRegimeError:
        check("d < p rejected", True)
    else:
        check("d < p rejected", False)

    # E is uniform on [0, 1] for a pure qubit with H = diag(0, 1)
    h2 = oe.HamiltonianSpectrum([0.0, 1.0])
    pure = oe.StateSpectrum.pure(2)
    check("uniform mean", abs(oe.raw_moment(pure, h2, 1) - 0.5) < 1e-12)
    check("uniform variance", abs(oe.central_moment(pure, h2, 2) - 1 / 12) < 1e-12)

    h = oe.HamiltonianSpectrum([-0.9, -0.4, 0.0, 0.1, 0.3, 0.5, 0.4])
    rho = oe.StateSpectrum([0.3, 0.2, 0.15, 0.12, 0.1, 0.08, 0.05])
    rep = oe.moment_report(rho, h, 4)
    check("report rows", [r["p"] for r in rep["rows"]] == [1, 2, 3, 4])
    check("report variance", abs(rep["sigma2"] - oe.central_moment(rho, h, 2)) < 1e-12)
    check("gaussian moment", oe.gaussian_moment(4, 0.5) == 3 * 0.25)

    check("validity", oe.validity_p_max(100) == 8 and oe.validity_p_max(16) == 2)
    try:
        oe.f_general(9, 4, 0.5)
    except oe.ConditionError:
        check("f_general precondition", True)
    else:
        check("f_general precondition", False)

    grid = oe.mgf_grid(rho, h, 5)
    window = oe.t_window(rho, h)
    check("grid interior", all(0 < t < window["effective"] for t in grid))
    b = oe.mgf_bound(rho, h, grid[0])
    check("mgf bound terms", len(b["terms"]) == 5 and b["total"] >= 0)

    run = oe.sample_energy(rho, h, 20000, seed=3, workers=2)
    again = oe.sample_energy(rho, h, 20000, seed=3, workers=2)
    check("reproducible", run.energies == again.energies)
    m = run.moments(2)
    exact = oe.central_moment(rho, h, 2)
    check("sample variance", abs(m[1]["value"] - exact) < 5 * m[1]["se"], f"{m[1]['value']:.5f} vs {exact:.5f}")
    hist = run.histogram()
    width = [b - a for a, b in zip(hist["bin_edges"], hist["bin_edges"][1:])]
    check("histogram normalized", abs(sum(p * w for p, w in zip(hist["density"], width)) - 1) < 1e-9)

    fig = oe.reproduce_fig1(seed=1, n=20000)
    check("seven-level eta", abs(fig["meta"]["eta"] - 0.2317) < 1e-4, f"{fig['meta']['eta']:.6f}")
    check("normalization flagged", fig["meta"]["state_normalization_flag"])
    print("smoke test passed")


if __name__ == "__main__":
    main()
