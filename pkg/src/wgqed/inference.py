"""Weighted least-squares inference for line shapes and correlation histograms.

The optimizer is a damped Gauss-Newton iteration (Levenberg-style lambda
adaptation) on weighted residuals, with central-difference Jacobians at a
per-parameter relative step of 1e-6. Bounds are enforced by smooth parameter
transforms (logistic for two-sided, exponential for one-sided), so the inner
iteration is unconstrained. Parameter covariance is reported in the natural
(external) parameter space from the Jacobian at the optimum, scaled by the
reduced chi-square when that exceeds one.

Every fit model pairs a physics shape with scale/offset nuisance parameters;
models are registered by name so the service and CLI can address them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit, voigt_profile

from .errors import (
    ConfigurationError,
    DataFormatError,
    DomainError,
    RankDeficiencyError,
)
from .physics import (
    CouplingFigures,
    cooperativity_from_transmission,
    g2_driven_shape,
    lorentzian_response,
)

_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite.hermgauss(64)


# ---------------------------------------------------------------------------
# data container


@dataclass(frozen=True)
class SpectrumData:
    """A fit-ready curve: abscissa, ordinate, optional 1-sigma errors.

    Labels carry the units as suffixes (e.g. ``detuning_hz``) and become the
    CSV header, so files stay self-describing.
    """

    x: np.ndarray
    y: np.ndarray
    yerr: np.ndarray | None = None
    x_label: str = "x"
    y_label: str = "y"

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 1 or y.shape != x.shape or x.size == 0:
            raise DataFormatError("x and y must be equal-length 1-d arrays")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DataFormatError("x and y must be finite")
        if self.yerr is not None:
            e = np.asarray(self.yerr, dtype=float)
            object.__setattr__(self, "yerr", e)
            if e.shape != x.shape:
                raise DataFormatError("yerr must match x in length")
            if not np.all(np.isfinite(e)) or np.any(e <= 0):
                raise DataFormatError("yerr must be finite and positive")

    def to_csv(self) -> str:
        lines = [f"{self.x_label},{self.y_label},{self.y_label}_err"]
        err = self.yerr if self.yerr is not None else np.full(self.x.size, np.nan)
        for xi, yi, ei in zip(self.x, self.y, err):
            etxt = "" if math.isnan(ei) else f"{ei:.10g}"
            lines.append(f"{xi:.10g},{yi:.10g},{etxt}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "SpectrumData":
        rows = []
        header = None
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = [c.strip() for c in line.split(",")]
                if len(header) not in (2, 3):
                    raise DataFormatError(
                        f"expected 2 or 3 header columns, got {len(header)}",
                        index=lineno,
                    )
                continue
            parts = line.split(",")
            if len(parts) != len(header):
                raise DataFormatError(
                    f"row has {len(parts)} columns, header has {len(header)}",
                    index=lineno,
                )
            try:
                vals = [float(p) if p.strip() else math.nan for p in parts]
            except ValueError as exc:
                raise DataFormatError(f"bad number on line {lineno}", index=lineno) from exc
            rows.append(vals)
        if header is None or not rows:
            raise DataFormatError("no data rows found")
        arr = np.asarray(rows, dtype=float)
        yerr = None
        if arr.shape[1] == 3 and not np.all(np.isnan(arr[:, 2])):
            yerr = arr[:, 2]
        return cls(
            x=arr[:, 0],
            y=arr[:, 1],
            yerr=yerr,
            x_label=header[0],
            y_label=header[1],
        )


# ---------------------------------------------------------------------------
# model registry


@dataclass(frozen=True)
class ParamSpec:
    name: str
    init: float
    lower: float | None = None
    upper: float | None = None


@dataclass(frozen=True)
class ModelSpec:
    name: str
    params: tuple[ParamSpec, ...]
    func: callable
    lattice: tuple[dict, ...] = ()  # optional multi-start inits (at most 8)
    init_from_data: callable | None = None  # data-driven starting values

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)


def _extinction_curve(x, alpha, phase, gamma_fwhm):
    # note |S|^2 = Re S for the Lorentzian response, so scale*curve + offset
    # exposes only four observable combinations of the five parameters: a
    # free additive offset is exactly redundant with (alpha, scale). Fits
    # should fix offset (or scale) unless an independent background
    # measurement constrains it; the rank check raises otherwise.
    s = lorentzian_response(x, gamma_fwhm)
    return np.abs(1.0 + alpha * np.exp(1j * phase) * s) ** 2


def _f_extinction(x, p):
    return p["scale"] * _extinction_curve(x, p["alpha"], p["phase"], p["gamma_fwhm_hz"]) + p["offset"]


def _f_extinction_diffused(x, p):
    sigma = p["sigma_hz"]
    x = np.asarray(x, dtype=float)
    if sigma == 0.0:
        core = _extinction_curve(x, p["alpha"], p["phase"], p["gamma_fwhm_hz"])
    else:
        offs = math.sqrt(2.0) * sigma * _GH_NODES
        acc = np.zeros_like(x)
        for off, w in zip(offs, _GH_WEIGHTS):
            acc += w * _extinction_curve(x - off, p["alpha"], p["phase"], p["gamma_fwhm_hz"])
        core = acc / math.sqrt(math.pi)
    return p["scale"] * core + p["offset"]


def _f_lorentzian_ple(x, p):
    u = 2.0 * (np.asarray(x, dtype=float) - p["center_hz"]) / p["fwhm_hz"]
    return p["amplitude"] / (1.0 + u * u) + p["offset"]


def _f_voigt_ple(x, p):
    dx = np.asarray(x, dtype=float) - p["center_hz"]
    hwhm = 0.5 * p["lorentz_fwhm_hz"]
    peak = voigt_profile(0.0, p["gauss_sigma_hz"], hwhm)
    return p["amplitude"] * voigt_profile(dx, p["gauss_sigma_hz"], hwhm) / peak + p["offset"]


def _f_g2_driven(x, p):
    core = g2_driven_shape(x, p["a"], p["decay_rate"], p["rabi_frequency"])
    return p["scale"] * core + p["offset"]


def _f_g2_bunching(x, p):
    t = np.abs(np.asarray(x, dtype=float))
    core = 1.0 + p["a"] * np.exp(-p["decay_rate"] * t)
    return p["scale"] * core + p["offset"]


def _f_malus(x, p):
    return p["amplitude"] * np.cos(np.asarray(x, dtype=float) - p["theta0_rad"]) ** 2 + p["offset"]


def _init_baseline(data: "SpectrumData") -> dict:
    """Start the multiplicative baseline at the data's median level."""
    level = float(np.median(data.y))
    return {"scale": level} if level > 0 else {}


def _init_peak(data: "SpectrumData") -> dict:
    ymin, ymax = float(np.min(data.y)), float(np.max(data.y))
    out = {"center_hz": float(data.x[int(np.argmax(data.y))]), "offset": ymin}
    if ymax > ymin:
        out["amplitude"] = ymax - ymin
    return out


def _init_fringe(data: "SpectrumData") -> dict:
    ymin, ymax = float(np.min(data.y)), float(np.max(data.y))
    out = {"offset": ymin}
    if ymax > ymin:
        out["amplitude"] = ymax - ymin
    return out


MODELS: dict[str, ModelSpec] = {}


def _register(spec: ModelSpec):
    MODELS[spec.name] = spec
    return spec


_register(
    ModelSpec(
        name="extinction",
        params=(
            ParamSpec("alpha", 0.1, 0.0, 5.0),
            ParamSpec("phase", math.pi),
            ParamSpec("gamma_fwhm_hz", 3.0e8, 0.0, None),
            ParamSpec("scale", 1.0, 0.0, None),
            ParamSpec("offset", 0.0),
        ),
        func=_f_extinction,
        init_from_data=_init_baseline,
        lattice=tuple(
            {"alpha": a, "phase": ph}
            for a in (0.05, 0.3)
            for ph in (0.5 * math.pi, math.pi, 1.5 * math.pi)
        ),
    )
)

_register(
    ModelSpec(
        name="extinction_diffused",
        params=(
            ParamSpec("alpha", 0.1, 0.0, 5.0),
            ParamSpec("phase", math.pi),
            ParamSpec("gamma_fwhm_hz", 3.0e8, 0.0, None),
            ParamSpec("sigma_hz", 1.0e8, 0.0, None),
            ParamSpec("scale", 1.0, 0.0, None),
            ParamSpec("offset", 0.0),
        ),
        func=_f_extinction_diffused,
        init_from_data=_init_baseline,
    )
)

_register(
    ModelSpec(
        name="lorentzian_ple",
        params=(
            ParamSpec("center_hz", 0.0),
            ParamSpec("fwhm_hz", 2.0e8, 0.0, None),
            ParamSpec("amplitude", 1.0, 0.0, None),
            ParamSpec("offset", 0.0),
        ),
        func=_f_lorentzian_ple,
        init_from_data=_init_peak,
    )
)

_register(
    ModelSpec(
        name="voigt_ple",
        params=(
            ParamSpec("center_hz", 0.0),
            ParamSpec("lorentz_fwhm_hz", 1.5e8, 0.0, None),
            ParamSpec("gauss_sigma_hz", 1.0e8, 0.0, None),
            ParamSpec("amplitude", 1.0, 0.0, None),
            ParamSpec("offset", 0.0),
        ),
        func=_f_voigt_ple,
        init_from_data=_init_peak,
    )
)

_register(
    ModelSpec(
        name="g2_driven",
        params=(
            ParamSpec("a", 1.0, 0.0, 1.0),
            ParamSpec("decay_rate", 1.0e9, 0.0, None),
            ParamSpec("rabi_frequency", 1.0e9, 0.0, None),
            ParamSpec("scale", 1.0, 0.0, None),
            ParamSpec("offset", 0.0),
        ),
        func=_f_g2_driven,
        init_from_data=_init_baseline,
    )
)

_register(
    ModelSpec(
        name="g2_bunching",
        params=(
            ParamSpec("a", 0.1, -1.0, None),
            ParamSpec("decay_rate", 1.0e9, 0.0, None),
            ParamSpec("scale", 1.0, 0.0, None),
            ParamSpec("offset", 0.0),
        ),
        func=_f_g2_bunching,
        init_from_data=_init_baseline,
    )
)

_register(
    ModelSpec(
        name="malus",
        params=(
            ParamSpec("theta0_rad", 0.0),
            ParamSpec("amplitude", 1.0, 0.0, None),
            ParamSpec("offset", 0.0),
        ),
        func=_f_malus,
        init_from_data=_init_fringe,
    )
)


# ---------------------------------------------------------------------------
# parameter transforms (external theta <-> unconstrained z)


def _to_internal(theta: float, lo, hi) -> float:
    if lo is not None and hi is not None:
        frac = (theta - lo) / (hi - lo)
        if not (0.0 < frac < 1.0):
            raise ConfigurationError(
                f"initial value {theta} is not strictly inside bounds ({lo}, {hi})"
            )
        return float(logit(frac))
    if lo is not None:
        if theta <= lo:
            raise ConfigurationError(f"initial value {theta} must exceed lower bound {lo}")
        return math.log(theta - lo)
    if hi is not None:
        if theta >= hi:
            raise ConfigurationError(f"initial value {theta} must be below upper bound {hi}")
        return math.log(hi - theta)
    return float(theta)


def _safe_exp(z: float) -> float:
    # candidate steps along a degenerate direction can push z past the
    # double range; an inf here turns into a rejected (non-finite) step
    # instead of an OverflowError
    return math.inf if z > 700.0 else math.exp(z)


def _to_external(z: float, lo, hi) -> float:
    if lo is not None and hi is not None:
        return lo + (hi - lo) * float(expit(z))
    if lo is not None:
        return lo + _safe_exp(z)
    if hi is not None:
        return hi - _safe_exp(z)
    return float(z)


def _dtheta_dz(z: float, lo, hi) -> float:
    if lo is not None and hi is not None:
        p = float(expit(z))
        return (hi - lo) * p * (1.0 - p)
    if lo is not None or hi is not None:
        d = _safe_exp(z)
        return d if lo is not None else -d
    return 1.0


# ---------------------------------------------------------------------------
# fit result


@dataclass(frozen=True)
class FitResult:
    """Converged (or not) parameter estimates with covariance and history."""

    model: str
    values: dict[str, float]
    sigmas: dict[str, float]
    free_names: tuple[str, ...]
    covariance: np.ndarray  # over free parameters, external space
    chi2: float
    ndof: int
    chi2_reduced: float
    converged: bool
    n_iterations: int
    cost_history: tuple[float, ...]
    message: str

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "values": dict(self.values),
            "sigmas": dict(self.sigmas),
            "free_names": list(self.free_names),
            "covariance": np.asarray(self.covariance).tolist(),
            "chi2": self.chi2,
            "ndof": self.ndof,
            "chi2_reduced": self.chi2_reduced,
            "converged": self.converged,
            "n_iterations": self.n_iterations,
            "message": self.message,
        }

    def to_json(self, **extra) -> str:
        doc = self.to_dict()
        doc.update(extra)
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "FitResult":
        return cls(
            model=doc["model"],
            values={k: float(v) for k, v in doc["values"].items()},
            sigmas={k: float(v) for k, v in doc["sigmas"].items()},
            free_names=tuple(doc["free_names"]),
            covariance=np.asarray(doc["covariance"], dtype=float),
            chi2=float(doc["chi2"]),
            ndof=int(doc["ndof"]),
            chi2_reduced=float(doc["chi2_reduced"]),
            converged=bool(doc["converged"]),
            n_iterations=int(doc.get("n_iterations", 0)),
            cost_history=(),
            message=doc.get("message", ""),
        )


# ---------------------------------------------------------------------------
# jacobians


def _fd_step(theta: float) -> float:
    return 1e-6 * (abs(theta) if theta != 0.0 else 1.0)


def numerical_jacobian(func, x, params: dict, free_names, stencil: int = 2) -> np.ndarray:
    """d func / d theta_i for the free parameters, by finite differences.

    stencil 2 is the engine's central difference; stencil 4 is the richer
    five-point rule used to cross-check it.
    """
    cols = []
    for name in free_names:
        theta = params[name]
        h = _fd_step(theta)

        def at(v):
            q = dict(params)
            q[name] = v
            return np.asarray(func(x, q), dtype=float)

        if stencil == 2:
            col = (at(theta + h) - at(theta - h)) / (2.0 * h)
        elif stencil == 4:
            col = (
                -at(theta + 2 * h) + 8.0 * at(theta + h) - 8.0 * at(theta - h) + at(theta - 2 * h)
            ) / (12.0 * h)
        else:
            raise ConfigurationError(f"unsupported stencil {stencil}")
        cols.append(col)
    return np.column_stack(cols) if cols else np.zeros((np.size(x), 0))


# ---------------------------------------------------------------------------
# the engine


def _rank_check(j_ext: np.ndarray, free_names) -> tuple[np.ndarray, np.ndarray]:
    """Raise RankDeficiencyError for flat or collinear parameter directions.

    The test runs on the column-normalized J^T J so unit disparity between
    parameters (Hz-scale vs dimensionless) cannot masquerade as degeneracy;
    only genuine structural redundancy trips the 1e-12 threshold. Returns
    the column norms and the scaled normal matrix for covariance work.
    """
    col = np.linalg.norm(j_ext, axis=0)
    if np.any(col == 0.0):
        dead = [free_names[i] for i in np.nonzero(col == 0.0)[0]]
        raise RankDeficiencyError(
            "model is flat along: " + ", ".join(dead), parameters=dead
        )
    scaled = j_ext / col[None, :]
    jtj_scaled = scaled.T @ scaled
    _, s, vt = np.linalg.svd(jtj_scaled)
    if s[-1] / s[0] < 1e-12:
        sick = []
        for row in vt[s / s[0] < 1e-12]:
            order = np.argsort(-np.abs(row))
            sick.extend(free_names[i] for i in order[:2])
        raise RankDeficiencyError(
            "parameters are not jointly identifiable: "
            + ", ".join(dict.fromkeys(sick)),
            parameters=list(dict.fromkeys(sick)),
        )
    return col, jtj_scaled


def fit(
    model: str | ModelSpec,
    data: SpectrumData,
    init: dict | None = None,
    bounds: dict | None = None,
    fixed: dict | list | tuple | None = None,
    max_iterations: int = 200,
    multi_start: bool = False,
) -> FitResult:
    """Damped Gauss-Newton least squares of a registered model to data.

    ``init`` overrides per-parameter starting values, ``bounds`` maps names
    to (lower, upper) pairs (None for open ends), and ``fixed`` freezes
    parameters either as a list of names (at their init) or a dict of
    values. Rank-deficient problems raise RankDeficiencyError naming the
    parameters that do not move the model; running out of iterations
    returns a result with converged=False rather than raising.
    """
    spec = MODELS.get(model) if isinstance(model, str) else model
    if spec is None:
        raise ConfigurationError(
            f"unknown model {model!r}; available: {sorted(MODELS)}"
        )
    init = dict(init or {})
    bounds = dict(bounds or {})
    if isinstance(fixed, (list, tuple, set)):
        fixed = {name: None for name in fixed}
    fixed = dict(fixed or {})
    known = set(spec.param_names)
    for d, label in ((init, "init"), (bounds, "bounds"), (fixed, "fixed")):
        bad = set(d) - known
        if bad:
            raise ConfigurationError(f"unknown {label} parameter(s) {sorted(bad)}")

    starts = [init]
    if multi_start:
        for point in spec.lattice[:8]:
            merged = dict(point)
            merged.update(init)  # explicit user inits win over lattice values
            starts.append(merged)

    best: FitResult | None = None
    first_error: Exception | None = None
    for start in starts:
        try:
            result = _fit_once(spec, data, start, bounds, fixed, max_iterations)
        except (RankDeficiencyError, ConfigurationError) as exc:
            if len(starts) == 1:
                raise
            if first_error is None:
                first_error = exc
            continue
        if best is None or (result.converged and not best.converged):
            best = result
        elif result.converged == best.converged and result.chi2 < best.chi2:
            best = result
    if best is None:
        raise first_error or RankDeficiencyError("no start point produced a fit")
    return best


def _fit_once(spec, data, init, bounds, fixed, max_iterations) -> FitResult:
    params = {p.name: p.init for p in spec.params}
    limits = {p.name: (p.lower, p.upper) for p in spec.params}
    for name, pair in bounds.items():
        limits[name] = (pair[0], pair[1])
    if spec.init_from_data is not None:
        for name, v in spec.init_from_data(data).items():
            params[name] = float(v)
    for name, v in init.items():
        params[name] = float(v)
    for name, v in fixed.items():
        if v is not None:
            params[name] = float(v)
    free_names = tuple(n for n in spec.param_names if n not in fixed)
    if not free_names:
        raise ConfigurationError("all parameters are fixed; nothing to fit")

    y = data.y
    sigma = data.yerr if data.yerr is not None else np.ones_like(y)
    weight = 1.0 / sigma

    def model_at(theta_vec):
        q = dict(params)
        q.update(zip(free_names, theta_vec))
        return np.asarray(spec.func(data.x, q), dtype=float)

    def weighted_jacobian(theta_vec):
        q = dict(params)
        q.update(zip(free_names, theta_vec))
        j = numerical_jacobian(spec.func, data.x, q, free_names, stencil=2)
        return j * weight[:, None]

    theta = np.array([params[n] for n in free_names], dtype=float)
    z = np.array(
        [_to_internal(params[n], *limits[n]) for n in free_names], dtype=float
    )

    def z_to_theta(zv):
        return np.array(
            [_to_external(zi, *limits[n]) for zi, n in zip(zv, free_names)]
        )

    resid = (y - model_at(theta)) * weight
    cost = float(resid @ resid)
    cost_history = [cost]
    lam = 1e-3
    converged = False
    message = "iteration limit reached"
    n_iter = 0

    j_ext = weighted_jacobian(theta)
    _rank_check(j_ext, free_names)

    if cost == 0.0:
        converged = True
        message = "already at a zero-cost point"
        n_iter = 1
    while not converged and n_iter < max_iterations:
        n_iter += 1
        scale_d = np.array(
            [_dtheta_dz(zi, *limits[n]) for zi, n in zip(z, free_names)]
        )
        j_int = j_ext * scale_d[None, :]
        g = j_int.T @ resid
        h = j_int.T @ j_int
        diag = np.diag(h).copy()
        diag[diag == 0.0] = 1.0
        accepted = False
        for _ in range(60):
            try:
                delta = np.linalg.solve(h + lam * np.diag(diag), g)
            except np.linalg.LinAlgError:
                lam = max(lam * 10.0, 1e-12)
                continue
            z_new = z + delta
            theta_new = z_to_theta(z_new)
            try:
                resid_new = (y - model_at(theta_new)) * weight
                cost_new = float(resid_new @ resid_new)
            except DomainError:
                # candidate underflowed onto an open boundary; treat as uphill
                cost_new = math.inf
            if np.isfinite(cost_new) and cost_new <= cost:
                step_norm = float(np.linalg.norm(delta))
                rel_drop = (cost - cost_new) / max(cost, 1e-300)
                z, theta, resid = z_new, theta_new, resid_new
                cost = cost_new
                cost_history.append(cost)
                lam = max(lam / 3.0, 1e-14)
                accepted = True
                if rel_drop < 1e-10 or step_norm < 1e-12 or cost == 0.0:
                    converged = True
                    message = "converged"
                break
            lam *= 10.0
            if lam > 1e14:
                break
        if not accepted:
            converged = True  # stuck: no downhill step exists at any damping
            message = "converged (no further improvement possible)"
            break
        if not converged:
            j_ext = weighted_jacobian(theta)

    params_final = dict(params)
    params_final.update(zip(free_names, theta))
    ndof = max(y.size - len(free_names), 1)
    chi2_red = cost / ndof

    j_ext = weighted_jacobian(theta)
    col, jtj_scaled = _rank_check(j_ext, free_names)
    cov = np.linalg.inv(jtj_scaled) / np.outer(col, col)
    if chi2_red > 1.0:
        cov = cov * chi2_red
    sig = np.sqrt(np.maximum(np.diag(cov), 0.0))
    sigmas = {n: 0.0 for n in spec.param_names}
    sigmas.update({n: float(v) for n, v in zip(free_names, sig)})

    return FitResult(
        model=spec.name,
        values={n: float(params_final[n]) for n in spec.param_names},
        sigmas=sigmas,
        free_names=free_names,
        covariance=cov,
        chi2=cost,
        ndof=ndof,
        chi2_reduced=chi2_red,
        converged=converged,
        n_iterations=n_iter,
        cost_history=tuple(cost_history),
        message=message,
    )


# ---------------------------------------------------------------------------
# derived quantities


@dataclass(frozen=True)
class DerivedCoupling:
    """Coupling figures extracted from an extinction fit."""

    figures: CouplingFigures
    fitted_phase_rad: float
    phase_deviation_rad: float
    phase_forced_to_pi: bool

    def to_dict(self) -> dict:
        doc = self.figures.to_dict()
        doc.update(
            fitted_phase_rad=self.fitted_phase_rad,
            phase_deviation_rad=self.phase_deviation_rad,
            phase_forced_to_pi=self.phase_forced_to_pi,
        )
        return doc


def derive_coupling(fit_result: FitResult, force_phase_pi: bool = True) -> DerivedCoupling:
    """Turn an extinction fit into transmission + cooperativity figures.

    The on-resonance relative transmission is evaluated at the fitted
    parameters with the phase forced to pi (fully absorptive convention) and
    normalized to the far-detuned level; its uncertainty comes from the fit
    covariance by linear propagation. A fitted phase further than 0.5 rad
    from pi makes that convention questionable, which is flagged via
    ``phase_deviation_rad`` and a warning.
    """
    spec = MODELS.get(fit_result.model)
    if spec is None or "alpha" not in fit_result.values:
        raise DomainError(
            f"model {fit_result.model!r} is not an extinction model; "
            "cooperativity needs an on-resonance transmission"
        )

    phase_fit = fit_result.values["phase"]
    deviation = abs((phase_fit - math.pi + math.pi) % (2.0 * math.pi) - math.pi)
    if deviation > 0.5:
        import warnings

        warnings.warn(
            f"fitted phase deviates {deviation:.2f} rad from pi; "
            "the absorptive transmission extraction may be biased",
            UserWarning,
            stacklevel=2,
        )

    def transmission_of(values: dict) -> float:
        v = dict(values)
        if force_phase_pi:
            v["phase"] = math.pi
        on_res = float(np.asarray(spec.func(np.array([0.0]), v))[0])
        far = v["scale"] + v["offset"]
        if far <= 0:
            raise DomainError("far-detuned level is not positive; cannot normalize")
        return on_res / far

    t0 = transmission_of(fit_result.values)
    grad = []
    for name in fit_result.free_names:
        h = _fd_step(fit_result.values[name])
        up = dict(fit_result.values)
        dn = dict(fit_result.values)
        up[name] += h
        dn[name] -= h
        grad.append((transmission_of(up) - transmission_of(dn)) / (2.0 * h))
    grad = np.asarray(grad)
    var = float(grad @ np.asarray(fit_result.covariance) @ grad)
    sigma_t = math.sqrt(max(var, 0.0))
    figures = cooperativity_from_transmission(t0, sigma_t)
    return DerivedCoupling(
        figures=figures,
        fitted_phase_rad=phase_fit,
        phase_deviation_rad=deviation,
        phase_forced_to_pi=force_phase_pi,
    )


def relative_coupling_efficiency(
    amplitude_forward: float,
    sigma_forward: float,
    amplitude_side: float,
    sigma_side: float,
    as_plain_ratio: bool = False,
) -> tuple[float, float]:
    """Relative collection efficiency from two fitted amplitudes.

    Default convention is the normalized share A_f / (A_f + A_s); set
    ``as_plain_ratio`` for the bare ratio A_f / A_s. First-order error
    propagation assuming independent amplitude errors.
    """
    if amplitude_forward <= 0 or amplitude_side <= 0:
        raise DomainError("amplitudes must be positive")
    if sigma_forward < 0 or sigma_side < 0:
        raise DomainError("sigmas must be nonnegative")
    if as_plain_ratio:
        val = amplitude_forward / amplitude_side
        rel = math.hypot(sigma_forward / amplitude_forward, sigma_side / amplitude_side)
        return val, val * rel
    total = amplitude_forward + amplitude_side
    val = amplitude_forward / total
    var = (amplitude_side * sigma_forward) ** 2 + (amplitude_forward * sigma_side) ** 2
    return val, math.sqrt(var) / total**2


@dataclass(frozen=True)
class PhaseSweepTable:
    """Extinction curves tabulated over a set of interference phases."""

    phases_rad: np.ndarray
    detuning_hz: np.ndarray
    intensity: np.ndarray  # shape (n_phases, n_detunings)

    def to_csv(self) -> str:
        lines = ["phase_rad,detuning_hz,intensity"]
        for i, ph in enumerate(self.phases_rad):
            for j, d in enumerate(self.detuning_hz):
                lines.append(f"{ph:.10g},{d:.10g},{self.intensity[i, j]:.10g}")
        return "\n".join(lines) + "\n"


def phase_sweep(
    alpha: float, gamma_fwhm_hz: float, phases_rad, detuning_grid_hz
) -> PhaseSweepTable:
    """Tabulate |1 + alpha e^{i phi} S(Delta)|^2 over phases and detunings."""
    phases = np.atleast_1d(np.asarray(phases_rad, dtype=float))
    grid = np.atleast_1d(np.asarray(detuning_grid_hz, dtype=float))
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    out = np.empty((phases.size, grid.size))
    for i, ph in enumerate(phases):
        out[i] = _extinction_curve(grid, alpha, ph, gamma_fwhm_hz)
    return PhaseSweepTable(phases_rad=phases, detuning_hz=grid, intensity=out)
