from dataclasses import dataclass, field
from typing import Any, Dict, Literal, Optional

import numpy as np

Provenance = Literal["exact", "montecarlo"]


@dataclass(frozen=True)
class MetricTensor:
    """Symmetric positive-definite quadratic form with its provenance.

    ``dual`` marks forms living on the cotangent space; their matrix pairs
    row-coordinate covectors against the same basis as vectors.
    """

    matrix: np.ndarray
    provenance: Provenance = "exact"
    stderr: Optional[np.ndarray] = None
    samples: Optional[int] = None
    seed: Optional[int] = None
    condition_number: float = 1.0
    dual: bool = False
    notes: Dict[str, Any] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    def quadratic(self, xi: np.ndarray) -> np.ndarray | float:
        x = np.asarray(xi, dtype=float)
        if x.ndim == 1:
            return float(x @ self.matrix @ x)
        return np.einsum("ni,ij,nj->n", x, self.matrix, x)

    def norm(self, xi: np.ndarray) -> np.ndarray | float:
        q = self.quadratic(xi)
        if isinstance(q, float):
            return float(np.sqrt(max(q, 0.0)))
        return np.sqrt(np.maximum(q, 0.0))

    def sqrt_det(self) -> float:
        sign, logdet = np.linalg.slogdet(self.matrix)
        if sign <= 0:
            raise ValueError("metric matrix must be positive definite")
        return float(np.exp(0.5 * logdet))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def to_payload(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "matrix": _matrix_list(self.matrix),
            "provenance": self.provenance,
            "condition_number": float(self.condition_number),
            "dual": bool(self.dual),
        }
        if self.stderr is not None:
            out["stderr"] = _matrix_list(self.stderr)
        if self.samples is not None:
            out["samples"] = int(self.samples)
        if self.seed is not None:
            out["seed"] = int(self.seed)
        if self.notes:
            out["notes"] = dict(self.notes)
        return out


def _matrix_list(m: np.ndarray) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.asarray(m)]


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)
