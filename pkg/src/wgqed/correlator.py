"""Start-stop-free photon correlation: histogram g2(tau) from time-tag pairs.

The estimator slides a +/- tau_max window over the (sorted) second stream for
every tag of the first and histograms all pair separations tau = t_b - t_a.
Bins are centered on integer multiples of the bin width so a true tau = 0 bin
exists; the two outermost bins are clipped so the histogram tiles exactly
[-tau_max, +tau_max] and the sum of raw counts equals the number of pairs in
that interval. Normalization uses the exact number of integer-ps slots each
bin covers, the two singles rates, and the span overlap reduced by tau_max
edge losses, giving g2 = 1 for uncorrelated streams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DataFormatError, DomainError
from .timetags import TimeTagStream

_MAX_EXPANDED = 1 << 24  # cap on the expanded pair buffer per batch


@dataclass(frozen=True)
class CorrelationHistogram:
    """Binned pair counts and their normalized g2 estimate.

    tau_ps holds bin centers (integer multiples of bin_width_ps from
    -tau_max to +tau_max); slot_counts_ps the exact number of integer
    delays each bin covers (outer bins are clipped). g2_err is the
    sqrt(N) Poisson error; empty bins carry the one-count upper-bound
    error instead of zero.
    """

    bin_width_ps: int
    tau_max_ps: int
    tau_ps: np.ndarray
    counts: np.ndarray
    slot_counts_ps: np.ndarray
    g2: np.ndarray
    g2_err: np.ndarray
    rate_a_hz: float
    rate_b_hz: float
    effective_span_ps: int
    n_pairs: int

    def zero_bin(self) -> tuple[float, float]:
        """(g2, err) of the bin centered at tau = 0."""
        i = int(np.nonzero(self.tau_ps == 0)[0][0])
        return float(self.g2[i]), float(self.g2_err[i])

    def to_csv(self) -> str:
        lines = ["tau_ps,counts,g2,g2_err"]
        for t, c, g, e in zip(self.tau_ps, self.counts, self.g2, self.g2_err):
            lines.append(f"{int(t)},{int(c)},{g:.8g},{e:.8g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, *, rate_a_hz=0.0, rate_b_hz=0.0,
                 effective_span_ps=0) -> "CorrelationHistogram":
        rows = [r for r in text.strip().splitlines() if r and not r.startswith("#")]
        if not rows or rows[0].strip() != "tau_ps,counts,g2,g2_err":
            raise DataFormatError("expected header 'tau_ps,counts,g2,g2_err'", index=1)
        data = np.array(
            [[float(v) for v in r.split(",")] for r in rows[1:]], dtype=float
        )
        if data.ndim != 2 or data.shape[1] != 4:
            raise DataFormatError("expected 4 columns")
        tau = data[:, 0].astype(np.int64)
        if tau.size < 3:
            raise DataFormatError("histogram needs at least 3 bins")
        w = int(tau[1] - tau[0])
        return cls(
            bin_width_ps=w,
            tau_max_ps=int(tau[-1]),
            tau_ps=tau,
            counts=data[:, 1].astype(np.int64),
            slot_counts_ps=_slot_counts(w, tau.size // 2),
            g2=data[:, 2],
            g2_err=data[:, 3],
            rate_a_hz=rate_a_hz,
            rate_b_hz=rate_b_hz,
            effective_span_ps=effective_span_ps,
            n_pairs=int(data[:, 1].sum()),
        )


def _slot_counts(width: int, m: int) -> np.ndarray:
    """Integer delays covered by each of the 2m+1 centered bins."""
    slots = np.full(2 * m + 1, width, dtype=np.int64)
    if width % 2 == 0:
        slots[m] = width - 1          # tau = 0 bin: |tau| < width/2
        slots[0] = slots[-1] = width // 2 + 1
    else:
        slots[0] = slots[-1] = (width + 1) // 2
    return slots


def _same_stream(a: TimeTagStream, b: TimeTagStream) -> bool:
    if a is b:
        return True
    return (
        a.channel == b.channel
        and len(a) == len(b)
        and bool(np.array_equal(a.timestamps_ps, b.timestamps_ps))
    )


def correlate_streams(
    a: TimeTagStream, b: TimeTagStream, bin_width_ps: int, tau_max_ps: int
) -> CorrelationHistogram:
    """Histogram all pair separations t_b - t_a within +/- tau_max.

    tau_max_ps must be a positive multiple of bin_width_ps. When the two
    arguments are the same stream, the trivial self-pairs (i, i) are
    excluded from the tau = 0 bin. Runs in O(N k) for k neighbors per
    window, with brute-force-exact pair counts.
    """
    if bin_width_ps <= 0:
        raise ConfigurationError(f"bin_width_ps must be positive, got {bin_width_ps}")
    if tau_max_ps <= 0 or tau_max_ps % bin_width_ps:
        raise ConfigurationError(
            f"tau_max_ps must be a positive multiple of bin_width_ps "
            f"(got {tau_max_ps} / {bin_width_ps})"
        )
    w = int(bin_width_ps)
    m = int(tau_max_ps // bin_width_ps)
    span_overlap = min(a.span_ps, b.span_ps)
    eff_span = span_overlap - tau_max_ps
    if eff_span <= 0:
        raise DomainError(
            f"tau_max {tau_max_ps} ps leaves no usable span "
            f"(overlap {span_overlap} ps)"
        )
    ta = a.timestamps_ps
    tb = b.timestamps_ps
    hist = np.zeros(2 * m + 1, dtype=np.int64)

    lo = np.searchsorted(tb, ta - tau_max_ps, side="left")
    hi = np.searchsorted(tb, ta + tau_max_ps, side="right")
    per = hi - lo
    start = 0
    n = ta.size
    while start < n:
        stop = start
        budget = 0
        while stop < n and budget + per[stop] <= _MAX_EXPANDED:
            budget += int(per[stop])
            stop += 1
        if stop == start:  # single tag with a huge window
            stop = start + 1
            budget = int(per[start])
        cnt = per[start:stop]
        total = int(cnt.sum())
        if total:
            ends = np.cumsum(cnt)
            flat = np.arange(total, dtype=np.int64)
            owner = np.searchsorted(ends, flat, side="right")
            offset = flat - (ends - cnt)[owner]
            bidx = lo[start:stop][owner] + offset
            tau = tb[bidx] - ta[start:stop][owner]
            absk = (2 * np.abs(tau) + w) // (2 * w)
            keep = np.abs(tau) <= tau_max_ps
            k = np.where(tau < 0, -absk, absk)[keep]
            hist += np.bincount((k + m).astype(np.intp), minlength=2 * m + 1)
        start = stop

    n_self = 0
    if _same_stream(a, b):
        n_self = len(a)
        hist[m] -= n_self

    slots = _slot_counts(w, m)
    dens_a = len(a) / a.span_ps
    dens_b = len(b) / b.span_ps
    denom = dens_a * dens_b * slots.astype(float) * eff_span
    with np.errstate(divide="ignore", invalid="ignore"):
        g2 = np.where(denom > 0, hist / denom, np.nan)
        err = np.where(denom > 0, np.sqrt(np.maximum(hist, 1)) / denom, np.nan)
    return CorrelationHistogram(
        bin_width_ps=w,
        tau_max_ps=int(tau_max_ps),
        tau_ps=np.arange(-m, m + 1, dtype=np.int64) * w,
        counts=hist,
        slot_counts_ps=slots,
        g2=g2,
        g2_err=err,
        rate_a_hz=a.rate_hz,
        rate_b_hz=b.rate_hz,
        effective_span_ps=int(eff_span),
        n_pairs=int(hist.sum()),
    )


@dataclass(frozen=True)
class CountTrace:
    """Windowed count trace reduced to a mean rate with standard error."""

    window_s: float
    counts: np.ndarray
    rate_hz: float
    rate_err_hz: float
    n_zero_windows: int
    degenerate: bool


def reduce_count_trace(stream: TimeTagStream, window_s: float) -> CountTrace:
    """Bin a stream into fixed windows and estimate the mean rate.

    The standard error comes from the window-to-window scatter, which is
    robust to bunching. Windows with zero counts are flagged; a trace is
    degenerate when it has fewer than two full windows or any empty one.
    A trailing partial window is ignored.
    """
    if window_s <= 0:
        raise ConfigurationError(f"window_s must be positive, got {window_s}")
    window_ps = int(round(window_s * 1e12))
    n_win = stream.span_ps // window_ps
    if n_win < 1:
        raise ConfigurationError("window longer than the acquisition span")
    ts = stream.timestamps_ps
    ts = ts[ts < n_win * window_ps]
    idx = (ts // window_ps).astype(np.intp)
    counts = np.bincount(idx, minlength=int(n_win)).astype(np.int64)
    mean = float(counts.mean())
    if n_win > 1:
        sem = float(counts.std(ddof=1) / np.sqrt(n_win))
    else:
        sem = float(np.sqrt(max(mean, 1.0)))
    n_zero = int((counts == 0).sum())
    return CountTrace(
        window_s=window_ps * 1e-12,
        counts=counts,
        rate_hz=mean / (window_ps * 1e-12),
        rate_err_hz=sem / (window_ps * 1e-12),
        n_zero_windows=n_zero,
        degenerate=bool(n_win < 2 or n_zero > 0),
    )
