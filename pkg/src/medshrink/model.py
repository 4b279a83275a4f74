"""Domain types for trial data and the regression designs built from them.

The mediation design stacks the baseline covariates (intercept first), the
mediator and the randomized treatment, in that order, so the treatment
coefficient is always the last entry of a coefficient vector.  The
instrument design holds the covariates, the treatment, and the
treatment-by-covariate interactions; the interaction with the intercept
column would duplicate the treatment column and is therefore dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError

__all__ = [
    "TrialDataset",
    "DesignBundle",
    "CoefficientVector",
    "CausalEffects",
    "build_designs",
]


def _as_float_vector(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 1:
        raise DataError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class TrialDataset:
    """One randomized trial: outcome, treatment offer, mediator, covariates.

    Parameters
    ----------
    y : ndarray of shape (n,)
        Continuous outcome.
    r : ndarray of shape (n,)
        Treatment offer, coded 0/1.
    m : ndarray of shape (n,)
        Mediator; binary mediators are stored as 0/1 reals.
    x : ndarray of shape (n, k)
        Baseline covariates with a leading all-ones intercept column.
    u : ndarray of shape (n,), optional
        Latent confounder, available only for simulated data.  It is kept
        for oracle checks and never enters an estimation design.
    x_names : tuple of str, optional
        Covariate column labels; defaults to ("const", "x1", ...).
    """

    y: np.ndarray
    r: np.ndarray
    m: np.ndarray
    x: np.ndarray
    u: np.ndarray | None = None
    x_names: tuple[str, ...] | None = None
    mediator_name: str = "m"
    treatment_name: str = "r"

    def __post_init__(self):
        y = _as_float_vector(self.y, "y")
        r = _as_float_vector(self.r, "r")
        m = _as_float_vector(self.m, "m")
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 2:
            raise DataError(f"x must be a 2-d matrix, got shape {x.shape}")
        n = y.shape[0]
        if n < 1:
            raise DataError("dataset is empty")
        for name, arr in (("r", r), ("m", m)):
            if arr.shape[0] != n:
                raise DataError(
                    f"column length mismatch: y has {n} rows, {name} has {arr.shape[0]}"
                )
        if x.shape[0] != n:
            raise DataError(
                f"column length mismatch: y has {n} rows, x has {x.shape[0]}"
            )
        if not np.all((r == 0.0) | (r == 1.0)):
            bad = np.unique(r[(r != 0.0) & (r != 1.0)])[:5]
            raise DataError(f"treatment not binary: r contains {bad.tolist()}")
        if not np.all(x[:, 0] == 1.0):
            raise DataError("x must carry a leading all-ones intercept column")
        u = self.u
        if u is not None:
            u = _as_float_vector(u, "u")
            if u.shape[0] != n:
                raise DataError(
                    f"column length mismatch: y has {n} rows, u has {u.shape[0]}"
                )
        names = self.x_names
        if names is None:
            names = ("const",) + tuple(f"x{j}" for j in range(1, x.shape[1]))
        names = tuple(names)
        if len(names) != x.shape[1]:
            raise DataError(
                f"x has {x.shape[1]} columns but {len(names)} names were given"
            )
        for arr in (y, r, m, x) + ((u,) if u is not None else ()):
            arr.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "x_names", names)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def k(self) -> int:
        """Width of x, intercept included."""
        return self.x.shape[1]

    def take(self, indices) -> "TrialDataset":
        """Row subset (used by the bootstrap); returns a new dataset."""
        idx = np.asarray(indices)
        return TrialDataset(
            y=self.y[idx],
            r=self.r[idx],
            m=self.m[idx],
            x=self.x[idx],
            u=None if self.u is None else self.u[idx],
            x_names=self.x_names,
            mediator_name=self.mediator_name,
            treatment_name=self.treatment_name,
        )


@dataclass(frozen=True)
class DesignBundle:
    """Second-stage design v = (X, M, R) and instrument design z = (X, R, RX).

    ``z_excluded`` indexes the instrument columns that do not appear in the
    second stage (the interaction block, plus any user-supplied external
    instruments); these are the columns whose joint significance the
    first-stage F diagnostic tests.
    """

    v: np.ndarray
    z: np.ndarray
    v_names: tuple[str, ...]
    z_names: tuple[str, ...]
    x_indices: tuple[int, ...]
    m_index: int
    r_index: int
    z_x_indices: tuple[int, ...]
    z_r_index: int
    z_excluded: tuple[int, ...]

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        z = np.asarray(self.z, dtype=float)
        if v.ndim != 2 or z.ndim != 2:
            raise DataError("v and z must be 2-d matrices")
        if v.shape[0] != z.shape[0]:
            raise DataError("v and z must have the same number of rows")
        if len(self.v_names) != v.shape[1] or len(self.z_names) != z.shape[1]:
            raise DataError("column name count does not match matrix width")
        v.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.v.shape[0]

    @property
    def treatment_name(self) -> str:
        return self.v_names[self.r_index]


@dataclass(frozen=True)
class CoefficientVector:
    """Named coefficient vector aligned with a design's column order."""

    values: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.shape[0] != len(self.names):
            raise DataError("coefficient vector and names are misaligned")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def get(self, name: str) -> float:
        try:
            return float(self.values[self.names.index(name)])
        except ValueError:
            raise KeyError(f"no coefficient named {name!r}") from None

    @property
    def beta_r(self) -> float:
        """Treatment coefficient; the last position by construction."""
        return float(self.values[-1])


@dataclass(frozen=True)
class CausalEffects:
    """Total, natural direct, and natural indirect effect of treatment offer."""

    te: float
    nde: float
    nie: float

    def __post_init__(self):
        for name in ("te", "nde", "nie"):
            if not np.isfinite(getattr(self, name)):
                raise DataError(f"{name} is not finite")


def build_designs(data: TrialDataset, extra_instruments: np.ndarray | None = None) -> DesignBundle:
    """Assemble the second-stage and instrument design matrices.

    Parameters
    ----------
    data : TrialDataset
    extra_instruments : ndarray of shape (n, j), optional
        User-supplied instrument columns appended to the interaction block.

    Returns
    -------
    DesignBundle
        v columns are (x..., m, r); z columns are (x..., r, r*x...) where
        the interaction with the intercept is omitted as an exact duplicate
        of the treatment column, followed by any extra instruments.

    Raises
    ------
    DataError
        On dimension mismatch or when n is too small for the instrument
        design to be full column rank.
    """
    n, k = data.n, data.k
    extra = None
    n_extra = 0
    if extra_instruments is not None:
        extra = np.asarray(extra_instruments, dtype=float)
        if extra.ndim == 1:
            extra = extra[:, None]
        if extra.shape[0] != n:
            raise DataError("extra instrument rows do not match the dataset")
        n_extra = extra.shape[1]
    if n <= 2 * k + n_extra + 1:
        raise DataError(
            f"insufficient observations: n={n} with k={k} covariate columns "
            f"requires n > {2 * k + n_extra + 1}"
        )

    v = np.column_stack([data.x, data.m, data.r])
    v_names = data.x_names + (data.mediator_name, data.treatment_name)

    interactions = data.r[:, None] * data.x[:, 1:]
    inter_names = tuple(f"{data.treatment_name}*{nm}" for nm in data.x_names[1:])
    blocks = [data.x, data.r[:, None], interactions]
    z_names = data.x_names + (data.treatment_name,) + inter_names
    if extra is not None:
        blocks.append(extra)
        z_names = z_names + tuple(f"iv{j}" for j in range(n_extra))
    z = np.column_stack(blocks)

    k_z = z.shape[1]
    return DesignBundle(
        v=v,
        z=z,
        v_names=v_names,
        z_names=z_names,
        x_indices=tuple(range(k)),
        m_index=k,
        r_index=k + 1,
        z_x_indices=tuple(range(k)),
        z_r_index=k,
        z_excluded=tuple(range(k + 1, k_z)),
    )
