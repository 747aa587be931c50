"""Freeze reference values of D_p(z) computed in 50-digit arithmetic.

Two independent routes are evaluated and cross-checked before anything is
written: the hypergeometric power series summed at high precision, and
mpmath's own ``pcfd``.  Run from the repository root:

    python tests/oracles/make_pcf_oracle.py
"""
import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50


def d_series(p, z):
    p = mp.mpc(p)
    z = mp.mpc(z)
    x = z * z / 2
    t1 = mp.sqrt(mp.pi) * mp.rgamma((1 - p) / 2) * mp.hyp1f1(-p / 2, mp.mpf(1) / 2, x)
    t2 = mp.sqrt(2 * mp.pi) * z * mp.rgamma(-p / 2) * mp.hyp1f1((1 - p) / 2, mp.mpf(3) / 2, x)
    return mp.power(2, p / 2) * mp.exp(-z * z / 4) * (t1 - t2)


def cases():
    out = []
    orders = [0, 1, -1, 2.5, complex(0, -9 / 32), complex(1.5, -9 / 32),
              complex(2, -9 / 32), complex(-0.7, 1.3), complex(3.2, -1.1),
              complex(-2.0, -2.0)]
    ray = complex(1, 1) / abs(complex(1, 1))
    radii = [0.3, 1.0, 2.5, 4.0, 5.5, 6.5, 7.5, 9.0, 12.0, 20.0, 56.5685424949238,
             70.71067811865476, 141.4213562373095]
    for p in orders:
        for r in radii:
            for zeta in (r * ray, -r * ray):
                out.append((p, zeta))
        for zeta in (0.0, 2.0, 1.0, -1.5, complex(0.4, -0.9), complex(-3.0, 2.0),
                     complex(0, 3.0), 7.0, complex(0, -8.0), -6.0):
            out.append((p, zeta))
    return out


def main():
    rows = []
    for p, zeta in cases():
        ref = mp.pcfd(mp.mpc(p), mp.mpc(zeta))
        if abs(zeta) <= 12:
            alt = d_series(p, zeta)
            scale = max(abs(ref), mp.mpf(10) ** -300)
            if abs(alt - ref) > mp.mpf(10) ** -30 * max(scale, 1):
                raise SystemExit(f"oracle routes disagree at p={p}, z={zeta}")
        rows.append({
            "p": [float(complex(p).real), float(complex(p).imag)],
            "z": [float(complex(zeta).real), float(complex(zeta).imag)],
            "value": [float(mp.re(ref)), float(mp.im(ref))],
        })
    dest = Path(__file__).resolve().parents[1] / "data" / "pcf_oracle.json"
    dest.write_text(json.dumps(rows, indent=1))
    print(f"wrote {len(rows)} values to {dest}")


if __name__ == "__main__":
    main()
