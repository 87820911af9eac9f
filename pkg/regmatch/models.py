"""Data models for regmatch."""

import math
from typing import Dict, List, Optional, Union

from pydantic import BaseModel, Field, model_validator

Number = Union[int, float]


class ValidationReport(BaseModel):
    """Outcome of a validator: ok, or the first violated invariant."""

    ok: bool = Field(..., description="Whether every invariant holds")
    invariant: Optional[str] = Field(
        None, description="Name of the first violated invariant"
    )
    index: Optional[int] = Field(None, description="Offending row or vertex")
    message: str = Field("", description="Human readable detail")

    @classmethod
    def passed(cls) -> "ValidationReport":
        """Create a passing report."""
        return cls(ok=True)

    @classmethod
    def violation(
        cls, invariant: str, index: Optional[int], message: str
    ) -> "ValidationReport":
        """Create a report naming the violated invariant."""
        return cls(ok=False, invariant=invariant, index=index, message=message)

    def __bool__(self) -> bool:
        return self.ok


class PhaseStats(BaseModel):
    """Walk statistics of one augmentation phase j."""

    j: int = Field(..., ge=0, description="Matching size before the phase")
    budget: Optional[int] = Field(
        None, description="Step budget b_j, None when untruncated"
    )
    restarts: int = Field(0, ge=0, description="Failed walks in the phase")
    steps: int = Field(0, ge=0, description="Sample calls in the phase")

    @model_validator(mode="after")
    def _steps_within_budget(self) -> "PhaseStats":
        if self.budget is not None:
            limit = self.restarts * self.budget + self.budget
            if self.steps > limit:
                raise ValueError(
                    f"phase {self.j} used {self.steps} steps, "
                    f"more than {limit}"
                )
        return self


class WalkStats(BaseModel):
    """Aggregated statistics of a matching run."""

    truncated: bool = Field(True, description="Whether walks were truncated")
    phases: List[PhaseStats] = Field(
        default_factory=list, description="Per-phase statistics"
    )
    total_steps: int = Field(0, ge=0, description="Sum of phase steps")
    total_restarts: int = Field(0, ge=0, description="Sum of phase restarts")
    augmentations: int = Field(0, ge=0, description="Successful walks")

    def record(
        self, phase: PhaseStats, keep_phase: bool = True
    ) -> None:
        """Fold one finished phase into the totals."""
        self.total_steps += phase.steps
        self.total_restarts += phase.restarts
        self.augmentations += 1
        if keep_phase:
            self.phases.append(phase)


class BvnTerm(BaseModel):
    """One term of a Birkhoff-von Neumann decomposition."""

    coefficient: Number = Field(..., gt=0, description="Weight lambda")
    permutation: List[int] = Field(
        ..., description="Column matched to each row"
    )

    @model_validator(mode="after")
    def _is_bijection(self) -> "BvnTerm":
        if sorted(self.permutation) != list(range(len(self.permutation))):
            raise ValueError("permutation is not a bijection on [0, n)")
        return self


class BvnDecomposition(BaseModel):
    """Ordered decomposition terms plus the mass left undecomposed."""

    n: int = Field(..., ge=1, description="Matrix dimension")
    integer: bool = Field(False, description="Whether weights are integers")
    terms: List[BvnTerm] = Field(default_factory=list)
    residual: float = Field(
        0.0, ge=0, description="Remaining mass as a fraction of the start"
    )

    @property
    def coefficient_sum(self) -> Number:
        """Sum of all term coefficients."""
        if self.integer:
            return sum(int(term.coefficient) for term in self.terms)
        return sum(float(term.coefficient) for term in self.terms)


BENCH_FIELDS = [
    "algo",
    "n",
    "d",
    "seed",
    "wall_time_ns",
    "total_steps",
    "total_restarts",
    "augmentations",
    "m",
]


class BenchRecord(BaseModel):
    """One benchmark run, serialised as one CSV row."""

    algo: str = Field(..., description="Algorithm id")
    n: int = Field(..., ge=1, description="Vertices per side")
    d: int = Field(..., ge=1, description="Degree")
    seed: int = Field(..., ge=0, description="Seed of the run")
    wall_time_ns: int = Field(..., ge=0, description="Wall time")
    total_steps: int = Field(0, ge=0, description="Sample calls")
    total_restarts: int = Field(0, ge=0, description="Failed walks")
    augmentations: int = Field(0, ge=0, description="Successful walks")
    m: int = Field(..., ge=1, description="Edge count n * d")

    @model_validator(mode="after")
    def _steps_cover_augmentations(self) -> "BenchRecord":
        if self.total_steps < self.augmentations:
            raise ValueError("total_steps must be >= augmentations")
        return self

    def to_row(self) -> Dict[str, str]:
        """Return the CSV row as strings keyed by header name."""
        data = self.model_dump()
        return {name: str(data[name]) for name in BENCH_FIELDS}

    @classmethod
    def from_row(cls, row: Dict[str, str]) -> "BenchRecord":
        """Parse a CSV row produced by ``to_row``."""
        return cls.model_validate({name: row[name] for name in BENCH_FIELDS})


class ProbeRecord(BaseModel):
    """One answered query of the probe game."""

    step: int = Field(..., ge=1, description="1-based probe number")
    u_side: str = Field(..., description="Side of the queried vertex")
    u: int = Field(..., ge=0, description="Queried vertex")
    v_side: str = Field(..., description="Side of the answer")
    v: int = Field(..., ge=0, description="Answered neighbour")
    mode: str = Field(..., description="Adversary mode when answering")
    hidden: bool = Field(False, description="Whether the edge is in M'")


GAME_FIELDS = [
    "prober",
    "d",
    "probes",
    "evasive_probes",
    "d_squared",
    "halted",
]


class GameRecord(BaseModel):
    """Summary of one probe game."""

    prober: str = Field(..., description="Prober id")
    d: int = Field(..., ge=1, description="Degree")
    probes: int = Field(..., ge=0, description="Probes at first M' reveal")
    evasive_probes: int = Field(
        ..., ge=0, description="Probes answered in evasive mode"
    )
    halted: bool = Field(
        False, description="Whether the prober stopped before a reveal"
    )

    @property
    def d_squared(self) -> int:
        return self.d * self.d

    def to_row(self) -> Dict[str, str]:
        """Return the CSV row as strings keyed by header name."""
        row = self.model_dump()
        row["d_squared"] = self.d_squared
        return {name: str(row[name]) for name in GAME_FIELDS}


class HittingRecord(BaseModel):
    """Monte-Carlo hitting time of Sink for one matching state."""

    n: int = Field(..., ge=1)
    d: int = Field(..., ge=1)
    k: int = Field(..., ge=1, description="Unmatched vertices per side")
    trials: int = Field(..., ge=1)
    mean_steps: float = Field(..., ge=0)

    @property
    def bound(self) -> float:
        """Expected walk length bound 2 + n / k."""
        return 2 + self.n / self.k


class CellSummary(BaseModel):
    """Mean walk steps of one (algo, n, d) benchmark cell against its bound."""

    algo: str
    n: int = Field(..., ge=1)
    d: int = Field(..., ge=1)
    runs: int = Field(..., ge=1)
    mean_steps: float = Field(..., ge=0)
    bound: float = Field(..., gt=0)

    @property
    def ok(self) -> bool:
        return self.mean_steps <= self.bound

    @property
    def ratio(self) -> float:
        """Mean steps over n * H(n), the scale-free step count."""
        return self.mean_steps / (self.n * harmonic(self.n))


def harmonic(n: int) -> float:
    """The n-th harmonic number H(n) = 1 + 1/2 + ... + 1/n."""
    return math.fsum(1.0 / i for i in range(1, n + 1))
