"""Peak detection, peak matching and reconstruction accuracy metrics.

Relative errors are computed in nanometres on the reporting grid (index ``j``
maps to ``400 + j`` nm by default), so a location of index 0 is never a
division by zero.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import Spectrum, WavelengthGrid
from .errors import DimensionMismatch, ZeroIntensity, ZeroWavelength

MIN_PROMINENCE = 0.05
MIN_SEPARATION = 5
MATCH_WINDOW = 10


@dataclass(frozen=True)
class Peak:
    """A detected peak.  ``index`` is the grid index, ``location`` the
    wavelength on the reporting grid."""

    index: int
    location: float
    intensity: float
    prominence: float = 0.0


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, Spectrum) else np.asarray(x, dtype=np.float64)


def local_maxima(v: np.ndarray) -> np.ndarray:
    """Indices strictly greater than each existing neighbour (edges included)."""
    v = np.asarray(v, dtype=np.float64)
    if v.size < 2:
        return np.arange(v.size)
    left = np.r_[True, v[1:] > v[:-1]]
    right = np.r_[v[:-1] > v[1:], True]
    return np.flatnonzero(left & right)


def prominence(v: np.ndarray, p: int) -> float:
    """Topographic prominence of the maximum at ``p``.

    On each side walk outwards until a strictly higher point (or the edge) and
    take the lowest value passed; the higher of the two minima is the base.
    A side that runs straight into the edge without descending is ignored.
    """
    h = v[p]
    bases = []
    for step in (-1, 1):
        j, lo = p + step, h
        while 0 <= j < len(v) and v[j] <= h:
            lo = min(lo, v[j])
            j += step
        if lo < h:
            bases.append(lo)
    return float(h - max(bases)) if bases else 0.0


def detect_peaks(x, min_prominence: float = MIN_PROMINENCE, min_separation: int = MIN_SEPARATION,
                 grid: WavelengthGrid | None = None) -> list[Peak]:
    """Local maxima with prominence >= ``min_prominence``.

    Candidates are kept greedily in descending prominence, dropping any within
    ``min_separation`` grid steps of one already kept.  The result is sorted by
    location.  ``grid`` defaults to the nm reporting grid.
    """
    v = _values(x)
    grid = grid or WavelengthGrid.nm(len(v))
    cands = [(prominence(v, int(p)), int(p)) for p in local_maxima(v)]
    cands = [c for c in cands if c[0] >= min_prominence]
    cands.sort(key=lambda c: (-c[0], c[1]))
    kept = []
    for prom, p in cands:
        if all(abs(p - q) >= min_separation for _, q in kept):
            kept.append((prom, p))
    return [Peak(p, float(grid.value(p)), float(v[p]), prom) for prom, p in sorted(kept, key=lambda c: c[1])]


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[int, int], ...]
    unmatched_truth: tuple[int, ...]
    spurious: tuple[int, ...]

    def recon_for(self, i: int) -> int | None:
        for a, b in self.pairs:
            if a == i:
                return b
        return None


def match_peaks(truth: list[Peak], recon: list[Peak], window: int = MATCH_WINDOW) -> Matching:
    """Greedy nearest-location matching within ``window`` grid steps.

    All candidate pairs are taken in order of increasing index distance (ties
    by truth then recon position); each peak is used at most once.
    """
    cand = sorted((abs(t.index - r.index), i, j)
                  for i, t in enumerate(truth) for j, r in enumerate(recon)
                  if abs(t.index - r.index) <= window)
    used_t, used_r, pairs = set(), set(), []
    for _, i, j in cand:
        if i not in used_t and j not in used_r:
            used_t.add(i)
            used_r.add(j)
            pairs.append((i, j))
    pairs.sort()
    return Matching(tuple(pairs),
                    tuple(i for i in range(len(truth)) if i not in used_t),
                    tuple(j for j in range(len(recon)) if j not in used_r))


def relative_position_error(truth: Peak, recon: Peak) -> float:
    """Signed ``(lambda_rec - lambda) / lambda`` on the reporting grid."""
    if truth.location == 0:
        raise ZeroWavelength("truth peak sits at wavelength 0; use the nm reporting grid")
    return (recon.location - truth.location) / truth.location


def relative_intensity_error(truth: Peak, recon: Peak) -> float:
    """Signed ``(I_rec - I) / I``."""
    if truth.intensity == 0:
        raise ZeroIntensity("truth peak has zero intensity")
    return (recon.intensity - truth.intensity) / truth.intensity


def rmse(truth, recon) -> float:
    a, b = _values(truth), _values(recon)
    if a.shape != b.shape:
        raise DimensionMismatch(f"spectra have shapes {a.shape} and {b.shape}")
    if isinstance(truth, Spectrum) and isinstance(recon, Spectrum) and truth.grid != recon.grid:
        raise DimensionMismatch("spectra live on different grids")
    d = a - b
    return float(np.sqrt(np.mean(d * d)))


def minor_peaks(peaks: list[Peak]) -> list[int]:
    """Positions in ``peaks`` of every peak except the most intense one
    (empty for single-peak spectra)."""
    if len(peaks) < 2:
        return []
    top = max(range(len(peaks)), key=lambda i: (peaks[i].intensity, -i))
    return [i for i in range(len(peaks)) if i != top]


def _renormalized(peaks: list[Peak], v: np.ndarray) -> list[Peak]:
    top = float(np.max(v))
    if top <= 0:
        return peaks
    return [Peak(p.index, p.location, p.intensity / top, p.prominence) for p in peaks]


@dataclass
class PeakRecord:
    sample: int
    truth_index: int
    truth_location: float
    recon_location: float | None
    rel_position_error: float | None
    rel_intensity_error: float | None
    matched: bool
    minor: bool


@dataclass
class MetricsReport:
    per_peak: list[PeakRecord] = field(default_factory=list)
    mae: float = float("nan")
    rmse: float = float("nan")
    n_samples: int = 0
    n_unmatched_truth: int = 0
    n_spurious: int = 0
    conventions: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("mae", "rmse"):
            d[k] = None if np.isnan(d[k]) else d[k]
        return d

    def matched(self) -> list[PeakRecord]:
        return [p for p in self.per_peak if p.matched]

    def position_errors(self) -> np.ndarray:
        return np.array([p.rel_position_error for p in self.matched()])

    def minor_intensity_errors(self) -> np.ndarray:
        """``|dI/I|`` of every minor truth peak; unmatched ones count as ``inf``."""
        return np.array([abs(p.rel_intensity_error) if p.matched else np.inf
                         for p in self.per_peak if p.minor])


def evaluate(X_true, X_rec, grid: WavelengthGrid | None = None, min_prominence: float = MIN_PROMINENCE,
             min_separation: int = MIN_SEPARATION, window: int = MATCH_WINDOW) -> MetricsReport:
    """Metrics over a dataset of spectra, one row per sample.

    Peaks are detected in both truth and reconstruction and matched per sample.
    Intensities are renormalised to each spectrum's global maximum before the
    relative intensity error is taken.  ``rmse`` is over all entries.
    """
    X_true = np.atleast_2d(np.asarray(X_true, dtype=np.float64))
    X_rec = np.atleast_2d(np.asarray(X_rec, dtype=np.float64))
    if X_true.shape != X_rec.shape:
        raise DimensionMismatch(f"truth {X_true.shape} vs reconstruction {X_rec.shape}")
    grid = grid or WavelengthGrid.nm(X_true.shape[1])
    rep = MetricsReport(n_samples=len(X_true), conventions={
        "grid": grid.to_dict(), "min_prominence": min_prominence,
        "min_separation": min_separation, "match_window": window,
        "matching": "greedy nearest index", "minor_peaks": "all but the most intense truth peak",
        "intensity_normalization": "divide by each spectrum's global maximum"})
    for n, (xt, xr) in enumerate(zip(X_true, X_rec)):
        tp = _renormalized(detect_peaks(xt, min_prominence, min_separation, grid), xt)
        rp = _renormalized(detect_peaks(xr, min_prominence, min_separation, grid), xr)
        m = match_peaks(tp, rp, window)
        minor = set(minor_peaks(tp))
        rep.n_unmatched_truth += len(m.unmatched_truth)
        rep.n_spurious += len(m.spurious)
        for i, t in enumerate(tp):
            j = m.recon_for(i)
            r = rp[j] if j is not None else None
            rep.per_peak.append(PeakRecord(
                n, t.index, t.location, r.location if r else None,
                relative_position_error(t, r) if r else None,
                relative_intensity_error(t, r) if r else None,
                r is not None, i in minor))
    errs = rep.position_errors()
    rep.mae = float(np.mean(np.abs(errs))) if errs.size else float("nan")
    d = X_true - X_rec
    rep.rmse = float(np.sqrt(np.mean(d * d)))
    return rep


# -- figure data ------------------------------------------------------------


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["%.17g" % v if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def position_error_csv(rep: MetricsReport) -> str:
    """``(wavelength_nm, rel_position_error)`` per matched peak."""
    return _csv(["wavelength_nm", "rel_position_error"],
                [(p.truth_location, p.rel_position_error) for p in rep.matched()])


def intensity_error_csv(rep: MetricsReport) -> str:
    """``(wavelength_nm, rel_intensity_error)`` per matched minor peak."""
    return _csv(["wavelength_nm", "rel_intensity_error"],
                [(p.truth_location, p.rel_intensity_error) for p in rep.matched() if p.minor])


def rmse_csv(rows) -> str:
    """``(method, domain, rmse)`` rows for the domain-gap comparison."""
    return _csv(["method", "domain", "rmse"], [(m, d, float(v)) for m, d, v in rows])
