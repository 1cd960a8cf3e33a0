"""Timing harness comparing non-recursive and recursive blur pipelines.

Two stages are timed separately, both excluding file I/O:

  lpf          scale-setting blur, x pass then y pass
  hpf+hessian  fixed-size differentiator bank on the blurred image,
               normalized Hessian determinant, threshold mask

The blur is where FIR and IIR differ: the FIR window grows with sigma
(half-width 5 sigma) while the recursive filter keeps three poles per
direction at every scale.  The second stage uses the same short stencils
either way, so its cost is scale independent.
"""

from __future__ import annotations

import csv
import statistics
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .design import fir_vm_bank, gaussian_fir, repeated_pole_blur
from .engine import apply_cols, apply_rows, conv_cols, conv_rows, max_threads, set_threads

# IIR first: its flatness predicate is the noise-sensitive one, so it is
# timed before the long FIR cells have heated the machine.
SIGMAS = (3.0, 6.0, 12.0, 24.0)
FAMILIES = ("repeated_pole", "gaussian_fir")

BENCH_HEADER = ("family", "sigma", "threads", "stage", "seconds",
                "height", "width", "reps")


@dataclass(frozen=True)
class BenchRecord:
    family: str
    sigma: float
    threads: int
    stage: str
    seconds: float
    dims: tuple
    reps: int

    def row(self):
        return (self.family, self.sigma, self.threads, self.stage,
                self.seconds, self.dims[0], self.dims[1], self.reps)


def _lpf_for(family: str, sigma: float):
    if family == "gaussian_fir":
        return gaussian_fir(sigma, 0, int(round(5 * sigma)))
    if family == "repeated_pole":
        return repeated_pole_blur(sigma)
    raise ValueError(f"unknown bench family {family!r}")


def _test_image(dims, seed=0):
    """Deterministic random test image, halving dims on MemoryError."""
    h, w = dims
    while True:
        try:
            rng = np.random.default_rng(seed)
            return rng.random((h, w))
        except MemoryError:
            if h <= 1024 or w <= 1024:
                raise
            h, w = h // 2, w // 2
            warnings.warn(f"bench image reduced to {h}x{w} (memory)")


def _blur(img, lpf):
    return apply_cols(apply_rows(img, lpf), lpf)


def _stage2(blurred, sigma, bank, t1):
    """Derivative bank, Hessian determinant, candidate mask."""
    d10 = conv_rows(blurred, bank[1])
    d01 = conv_cols(blurred, bank[1])
    d20 = conv_rows(blurred, bank[2])
    d02 = conv_cols(blurred, bank[2])
    d11 = conv_cols(d10, bank[1])
    trace = d20 + d02
    ndet = sigma ** 4 * (d20 * d02 - d11 * d11)
    mask = (ndet > t1) & (trace > 0)
    return int(mask.sum()), d01


def _median_time(fn, reps):
    fn()  # warm up (first call may trigger compilation)
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(statistics.median(times))


def _prime(img, bank, budget=2.0):
    """Run untimed work until the machine reaches steady state.

    Whichever cell is timed first otherwise absorbs the startup
    transients (frequency governor ramp, compilation, page cache) and
    its median comes out 15-25% high, which is enough to break the
    scale-flatness check on the recursive family.
    """
    fir = _lpf_for("gaussian_fir", SIGMAS[0])
    iir = _lpf_for("repeated_pole", SIGMAS[0])
    _stage2(_blur(img, iir), SIGMAS[0], bank, 1e-4)
    t0 = time.perf_counter()
    while time.perf_counter() - t0 < budget:
        _blur(img, fir)


def run_bench(dims=(2048, 2048), sigmas=SIGMAS, families=FAMILIES,
              threads=None, reps=5, seed=0):
    """Time both stages for every (family, sigma, threads) combination.

    Returns a list of BenchRecord with the median of `reps` wall-clock
    measurements per cell.  Thread counts default to 1 and the hardware
    maximum (deduplicated on single-core hosts).
    """
    if min(dims) < 1024:
        raise ValueError("bench dims must be at least 1024 per side")
    if reps < 5:
        raise ValueError("reps must be at least 5")
    if threads is None:
        threads = (1, max_threads())
    threads = tuple(dict.fromkeys(threads))
    img = _test_image(dims, seed)
    dims = img.shape
    bank = fir_vm_bank(3, cascade_mode="behind_blur")
    records = []
    for nt in threads:
        set_threads(nt)
        _prime(img, bank)
        for family in families:
            for sigma in sigmas:
                lpf = _lpf_for(family, sigma)
                t_lpf = _median_time(lambda: _blur(img, lpf), reps)
                records.append(BenchRecord(family, sigma, nt, "lpf",
                                           t_lpf, dims, reps))
                blurred = _blur(img, lpf)
                t1 = 1e-4
                t_hes = _median_time(
                    lambda: _stage2(blurred, sigma, bank, t1), reps)
                records.append(BenchRecord(family, sigma, nt, "hpf+hessian",
                                           t_hes, dims, reps))
    set_threads(max_threads())
    return records


def write_bench_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BENCH_HEADER)
        for rec in records:
            w.writerow(rec.row())


def _lpf_times(records, family, nt):
    rows = [r for r in records
            if r.family == family and r.threads == nt and r.stage == "lpf"]
    rows.sort(key=lambda r: r.sigma)
    return [r.seconds for r in rows]


def trend_report(records):
    """Evaluate the scaling-trend predicates on a bench table.

    Keys: iir_flat (max/min time ratio across sigma < 1.15 for every
    thread count), fir_increasing (strictly, in sigma), speedup (FIR/IIR
    time at the largest sigma, per thread count), margin_shrinks (that
    speedup is smaller at the maximum thread count than at 1 thread;
    None when only one thread count was measured).
    """
    threads = sorted({r.threads for r in records})
    report = {"iir_flat": True, "fir_increasing": True,
              "speedup": {}, "margin_shrinks": None}
    for nt in threads:
        iir = _lpf_times(records, "repeated_pole", nt)
        fir = _lpf_times(records, "gaussian_fir", nt)
        if max(iir) / min(iir) >= 1.15:
            report["iir_flat"] = False
        if not all(a < b for a, b in zip(fir, fir[1:])):
            report["fir_increasing"] = False
        report["speedup"][nt] = fir[-1] / iir[-1]
    if len(threads) > 1:
        report["margin_shrinks"] = (report["speedup"][threads[-1]]
                                    < report["speedup"][threads[0]])
    return report
