"""Quick check of the distmin extension module.

Build and install first:
    maturin build --release -m crates/py/Cargo.toml -o dist && pip install dist/*.whl
"""

import math

import distmin


def circle(n, r):
    return [(r * math.cos(2 * math.pi * i / n), r * math.sin(2 * math.pi * i / n)) for i in range(n)]


def main():
    m_curve = distmin.Curve(circle(2048, 1.0))
    n_curve = distmin.Curve(circle(2048, 2.0))
    assert m_curve.orientation() == "positive"
    l_m, l_n = m_curve.arc_length(), n_curve.arc_length()

    v, w, phi_min = distmin.analytic_minimizers(l_m, l_n, 1024)
    assert abs(v.psi() - phi_min) < 1e-6 * phi_min
    assert abs(w.psi() - phi_min) < 1e-6 * phi_min

    res = distmin.minimize(l_m, l_n, grid=1024, seed=0)
    assert res.converged, res.diagnostic
    err = max(abs(a - b) for a, b in zip(res.map.values, v.values))
    assert err < 1e-4, err
    print(f"psi={res.report['psi']:.9f} phi_min={phi_min:.9f} sup_err={err:.2e} iters={res.iterations}")

    mp, npar = m_curve.parametrize(1024), n_curve.parametrize(1024)
    phi = distmin.phi_curves(mp, npar, v)
    print(f"phi on curves={phi:.6f}")

    back = distmin.Reparametrization.from_csv(v.to_csv())
    assert back.values == v.values

    d = distmin.diagnose(1.0, 0.5)
    assert d["regime"] == "no-minimum-proven", d
    try:
        distmin.analytic_minimizers(1.0, 0.5, 64)
    except RuntimeError:
        pass
    else:
        raise AssertionError("expected a regime error")

    seq = distmin.zigzag_sequence(1.0, 0.5, 4, 4096)
    assert all(b[2] < a[2] for a, b in zip(seq, seq[1:])), seq

    lin = distmin.Reparametrization.linear(1.0, 0.5, "preserve", 16000)
    sv, fd = distmin.second_variation_probe(lin, 0.5, 0.3, 1e-3)
    assert sv < 0 and abs(sv - fd) <= 1e-3 * abs(fd), (sv, fd)

    g = distmin.g_contract([[1.0, 0.0], [0.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]])
    assert abs(g - 1.0) < 1e-12
    print("ok")


if __name__ == "__main__":
    main()
