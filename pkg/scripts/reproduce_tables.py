"""Print the designed-filter coefficient and moment tables.

Covers the interpolating differentiators (taps and dc derivatives), the
sampled-Gaussian derivative bank in one-stage and two-stage form, the
recursive blur coefficient listings at sigma = 8, the vanishing-moment
table of the FIR bank, and the impulse-response moment sums of the
recursive blurs.
"""

import argparse
import math

import numpy as np

from vmfilt.analysis import moment_table
from vmfilt.design import (
    blunt_exponential_blur,
    butterworth_appendix,
    butterworth_blur,
    butterworth_cutoff,
    fir_vm_bank,
    gaussian_fir,
    interp_diff,
    repeated_pole_blur,
)
from vmfilt.engine import impulse_response
from vmfilt.polyz import dc_derivatives


def _fmt_row(vals, width=12, prec=4):
    out = []
    for v in vals:
        v = complex(v)
        if abs(v.imag) < 5e-11:
            out.append(f"{v.real:+.{prec}f}".rjust(width))
        else:
            out.append(f"{v.imag:+.{prec}f}i".rjust(width))
    return " ".join(out)


def show_differentiators(l_max=4):
    print("interpolating differentiators, taps h(-2)..h(2)")
    for d in range(5):
        h = interp_diff(d)
        taps = " ".join(f"{t:+.4f}" for t in h.taps)
        print(f"  d={d}  [{taps}]")
    print()
    print(f"dc derivatives rho_l, l = 0..{l_max} (rows d, expected i^d d!"
          " on the diagonal)")
    for d in range(5):
        rho = dc_derivatives(interp_diff(d).to_rational(), l_max=l_max)
        print(f"  d={d}  {_fmt_row(rho)}")
    print()


def show_gaussian_stages(sigma=1.0, k=5, l_max=4):
    print(f"sampled-Gaussian bank, sigma={sigma:g}, K={k}: one-stage rho_l")
    for d in range(5):
        rho = dc_derivatives(gaussian_fir(sigma, d, k).to_rational(),
                             l_max=l_max)
        print(f"  d={d}  {_fmt_row(rho)}")
    print()
    print("two-stage (blur cascaded with interpolating differentiators)")
    blur = gaussian_fir(sigma, 0, k).to_rational()
    for d in range(5):
        rho = dc_derivatives(blur.cascade(interp_diff(d).to_rational()),
                             l_max=l_max)
        print(f"  d={d}  {_fmt_row(rho)}")
    print()


def _show_three_part(name, f):
    print(f"{name}")
    print(f"  b0 = {f.b_zero:+.4f}")
    print(f"  b+ = [{' '.join(f'{b:+.4f}' for b in f.b_plus)}]")
    print(f"  a+ = [{' '.join(f'{a:+.4f}' for a in f.a_plus)}]")


def show_recursive_blurs(sigma=8.0):
    _show_three_part(f"repeated-pole blur, sigma={sigma:g}",
                     repeated_pole_blur(sigma))
    wc = butterworth_cutoff(sigma)
    _show_three_part(
        f"Butterworth blur, sigma={sigma:g} (cutoff {wc:.4f})",
        butterworth_blur(sigma))
    print()


def show_moments(d_max=5, sigma=6.0):
    rep = moment_table(fir_vm_bank(d_max), d_max)
    print(f"FIR bank moment table, D={d_max} "
          f"(max deviation from identity {rep.max_dev:.2e})")
    for l in range(d_max):
        print(f"  l={l}  {_fmt_row(rep.table[l], prec=6, width=11)}")
    print()
    print(f"recursive blur impulse-response moments at sigma={sigma:g}")
    p = math.exp(-1.0 / sigma)
    fams = [
        ("repeated_pole", repeated_pole_blur(sigma)),
        ("butterworth", butterworth_blur(sigma)),
        ("butterworth_appendix", butterworth_appendix(sigma)),
        ("blunt_exponential", blunt_exponential_blur(sigma)),
    ]
    for name, f in fams:
        h = impulse_response(f)
        m = np.arange(h.size) - h.size // 2
        s0 = float(h.sum())
        s2 = float(np.dot(m.astype(np.float64) ** 2, h))
        note = ""
        if name == "blunt_exponential":
            # m2 = 3 (2p/(1-p)^2 + 1/2): this family nulls Nyquist only
            note = f"   (analytic m2 = {3 * (2 * p / (1 - p) ** 2 + 0.5):.4f})"
        print(f"  {name:22s} sum h = {s0:.10f}   sum m^2 h = {s2: .6e}{note}")
    print()


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sigma", type=float, default=8.0,
                    help="scale for the recursive blur listings")
    args = ap.parse_args()
    show_differentiators()
    show_gaussian_stages()
    show_recursive_blurs(args.sigma)
    show_moments()


if __name__ == "__main__":
    main()
