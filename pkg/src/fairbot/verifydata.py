"""Dataset ingestion and the ensemble verification workflows.

Datasets are homogeneous collections of cases, each holding an M x p member
block and optionally a p-vector observation. Two interchange formats are
supported:

* JSON lines: one case per line,
  {"case": "<id>", "obs": [...] | null, "members": [[...], ...]}.
  A leading {"manifest": {...}} line (written by the CLI) is skipped.
* CSV, long format: header `case,role,v1,...,vp` with role `obs` or `m1..mM`.

run_verification evaluates the three sample transforms either against the
stored observations or in perfect-reliability mode, where one held-out member
plays the observation and the ensemble is a subsample of the rest.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from . import bot
from .errors import (
    DomainError,
    EmptySample,
    MissingObservation,
    NonFiniteValue,
    ParseError,
    SchemaError,
    SubsampleTooLarge,
    TooFewMembers,
)
from .matstat import RngStream
from .scenarios import SELECTION_OFFSET, ExperimentReport
from .uniformity import BotSeries

MODES = ("perfect_reliability", "against_observation")
SELECTIONS = ("first_n", "random")
RANDOM_HOLDOUT = "random"


@dataclass(eq=False)
class VerificationDataset:
    """Forecast cases with constant dimension p and member count M."""

    case_ids: list[str]
    members: np.ndarray            # (C, M, p)
    obs: np.ndarray | None = None  # (C, p) when observations are present

    def __post_init__(self):
        self.members = np.asarray(self.members, dtype=float)
        if self.members.ndim != 3:
            raise SchemaError(f"members must be (cases, M, p), got shape {self.members.shape}")
        if self.n_members < 2:
            raise SchemaError(f"need at least 2 members per case, got {self.n_members}")
        if len(self.case_ids) != self.n_cases:
            raise SchemaError("case id count does not match the member block")
        if not np.all(np.isfinite(self.members)):
            raise NonFiniteValue("member values must be finite")
        if self.obs is not None:
            self.obs = np.asarray(self.obs, dtype=float)
            if self.obs.shape != (self.n_cases, self.dim):
                raise SchemaError(
                    f"obs must be ({self.n_cases}, {self.dim}), got {self.obs.shape}"
                )
            if not np.all(np.isfinite(self.obs)):
                raise NonFiniteValue("observation values must be finite")

    @property
    def n_cases(self) -> int:
        return self.members.shape[0]

    @property
    def n_members(self) -> int:
        return self.members.shape[1]

    @property
    def dim(self) -> int:
        return self.members.shape[2]


@dataclass(frozen=True)
class VerifyPlan:
    """How to turn dataset cases into transform evaluations."""

    mode: str
    n_sub: int
    member_selection: str = "first_n"
    holdout: int | str = 0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.member_selection not in SELECTIONS:
            raise DomainError(
                f"member selection must be one of {SELECTIONS}, got {self.member_selection!r}"
            )
        if isinstance(self.holdout, str) and self.holdout != RANDOM_HOLDOUT:
            raise DomainError(f"holdout must be a member index or 'random', got {self.holdout!r}")
        if isinstance(self.holdout, int) and self.holdout < 0:
            raise DomainError(f"holdout index must be nonnegative, got {self.holdout}")
        if self.n_sub < 2:
            raise DomainError(f"subsample size must be >= 2, got {self.n_sub}")


def _parse_case_vector(raw, p: int | None, case_id: str, what: str) -> np.ndarray:
    vec = np.asarray(raw, dtype=float)
    if vec.ndim != 1 or (p is not None and vec.size != p):
        raise SchemaError(f"case {case_id!r}: {what} has wrong length")
    return vec


def load_jsonl(path) -> VerificationDataset:
    case_ids: list[str] = []
    members: list[np.ndarray] = []
    obs: list[np.ndarray | None] = []
    p = None
    m = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(record, dict):
                raise ParseError(f"{path}:{lineno}: expected a JSON object")
            if "manifest" in record:
                continue
            if "case" not in record or "members" not in record:
                raise SchemaError(f"{path}:{lineno}: record needs 'case' and 'members'")
            case_id = str(record["case"])
            try:
                block = np.asarray(record["members"], dtype=float)
            except ValueError:
                raise SchemaError(f"case {case_id!r}: ragged member rows") from None
            if block.ndim != 2:
                raise SchemaError(f"case {case_id!r}: members must be a list of vectors")
            if p is None:
                p, m = block.shape[1], block.shape[0]
            if block.shape != (m, p):
                raise SchemaError(
                    f"case {case_id!r}: member block is {block.shape}, expected {(m, p)}"
                )
            raw_obs = record.get("obs")
            obs.append(
                None if raw_obs is None else _parse_case_vector(raw_obs, p, case_id, "obs")
            )
            case_ids.append(case_id)
            members.append(block)
    return _assemble(case_ids, members, obs, path)


def load_csv(path) -> VerificationDataset:
    grouped: dict[str, dict[str, np.ndarray]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if len(header) < 3 or header[0] != "case" or header[1] != "role":
            raise SchemaError(f"{path}: header must be case,role,v1,...,vp")
        p = len(header) - 2
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != p + 2:
                raise ParseError(f"{path}:{lineno}: expected {p + 2} columns, got {len(row)}")
            case_id, role = row[0], row[1]
            try:
                vec = np.array([float(v) for v in row[2:]])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric value") from None
            slot = grouped.setdefault(case_id, {})
            if role in slot:
                raise SchemaError(f"case {case_id!r}: duplicate role {role!r}")
            slot[role] = vec
    case_ids, members, obs = [], [], []
    m = None
    for case_id, roles in grouped.items():
        member_roles = sorted(
            (r for r in roles if r.startswith("m")), key=lambda r: _member_rank(r, case_id)
        )
        expected = [f"m{i}" for i in range(1, len(member_roles) + 1)]
        if member_roles != expected:
            raise SchemaError(f"case {case_id!r}: member roles must be m1..mM with no gaps")
        if m is None:
            m = len(member_roles)
        if len(member_roles) != m:
            raise SchemaError(f"case {case_id!r}: expected {m} members, got {len(member_roles)}")
        case_ids.append(case_id)
        members.append(np.stack([roles[r] for r in member_roles]))
        obs.append(roles.get("obs"))
    return _assemble(case_ids, members, obs, path)


def _member_rank(role: str, case_id: str) -> int:
    try:
        return int(role[1:])
    except ValueError:
        raise SchemaError(f"case {case_id!r}: bad role {role!r}") from None


def _assemble(case_ids, members, obs, path) -> VerificationDataset:
    if not case_ids:
        raise SchemaError(f"{path}: no cases found")
    have_obs = [o is not None for o in obs]
    if any(have_obs) and not all(have_obs):
        missing = case_ids[have_obs.index(False)]
        raise SchemaError(f"obs present for some cases but missing for case {missing!r}")
    return VerificationDataset(
        case_ids=case_ids,
        members=np.stack(members),
        obs=np.stack(obs) if all(have_obs) else None,
    )


def load_dataset(path, fmt: str = "jsonl") -> VerificationDataset:
    """Load and validate a dataset file in jsonl or csv format."""
    if fmt == "jsonl":
        return load_jsonl(path)
    if fmt == "csv":
        return load_csv(path)
    raise DomainError(f"format must be 'jsonl' or 'csv', got {fmt!r}")


def write_jsonl(dataset: VerificationDataset, path, manifest_record: dict | None = None):
    """Write a dataset in the JSON-lines interchange format."""
    with open(path, "w", encoding="utf-8") as fh:
        if manifest_record is not None:
            fh.write(json.dumps({"manifest": manifest_record}) + "\n")
        for i, case_id in enumerate(dataset.case_ids):
            record = {
                "case": case_id,
                "obs": None if dataset.obs is None else dataset.obs[i].tolist(),
                "members": dataset.members[i].tolist(),
            }
            fh.write(json.dumps(record) + "\n")


def synth_dataset(
    law: bot.GaussianLaw,
    n_cases: int,
    n_members: int,
    seed: int,
    member_shift=None,
) -> VerificationDataset:
    """Synthetic Gaussian dataset: per case, one observation and M members.

    member_shift, when given, displaces the member law's mean relative to the
    observation law, producing a biased-forecast dataset.
    """
    if n_cases < 1:
        raise DomainError(f"n_cases must be >= 1, got {n_cases}")
    if n_members < 2:
        raise TooFewMembers(f"need at least 2 members, got {n_members}")
    p = law.dim
    shift = np.zeros(p) if member_shift is None else np.broadcast_to(
        np.asarray(member_shift, dtype=float), (p,)
    )
    source = RngStream(seed).source()
    z = source.normals((n_cases, n_members + 1, p))
    transformed = z @ law.chol.lower.T + law.mean
    obs = transformed[:, 0, :]
    members = transformed[:, 1:, :] + shift
    case_ids = [f"case-{i:06d}" for i in range(n_cases)]
    return VerificationDataset(case_ids=case_ids, members=members, obs=obs.copy())


def validate_plan(dataset: VerificationDataset, plan: VerifyPlan):
    """Check that a plan is consistent with a dataset, without running it."""
    p, m = dataset.dim, dataset.n_members
    if plan.n_sub <= p:
        raise TooFewMembers(f"fair transform needs n_sub > p, got n_sub={plan.n_sub}, p={p}")
    perfect = plan.mode == "perfect_reliability"
    available = m - 1 if perfect else m
    if plan.n_sub > available:
        raise SubsampleTooLarge(
            f"n_sub={plan.n_sub} exceeds the {available} members available per case"
        )
    if perfect and plan.holdout != RANDOM_HOLDOUT and plan.holdout >= m:
        raise DomainError(f"holdout index {plan.holdout} out of range for M={m}")
    if not perfect and dataset.obs is None:
        raise MissingObservation("dataset has no observations for against-observation mode")


def _select_cases(dataset: VerificationDataset, plan: VerifyPlan):
    """Resolve the per-case pseudo-observation and member subsample indices."""
    validate_plan(dataset, plan)
    c, m = dataset.n_cases, dataset.n_members
    perfect = plan.mode == "perfect_reliability"
    rng = RngStream(plan.seed, SELECTION_OFFSET).generator()
    if perfect:
        if plan.holdout == RANDOM_HOLDOUT:
            holdouts = rng.integers(0, m, size=c)
        else:
            holdouts = np.full(c, int(plan.holdout))
        obs = dataset.members[np.arange(c), holdouts]
    else:
        holdouts = None
        obs = dataset.obs
    picks = np.empty((c, plan.n_sub), dtype=np.intp)
    for i in range(c):
        pool = np.arange(m)
        if holdouts is not None:
            pool = np.delete(pool, holdouts[i])
        if plan.member_selection == "first_n":
            picks[i] = pool[: plan.n_sub]
        else:
            picks[i] = rng.choice(pool, size=plan.n_sub, replace=False)
    members = dataset.members[np.arange(c)[:, None], picks]
    return obs, members


def run_verification(
    dataset: VerificationDataset, plan: VerifyPlan, bins: int = 20
) -> ExperimentReport:
    """Evaluate the naive, adjusted, and fair transforms over a dataset."""
    obs, members = _select_cases(dataset, plan)
    values = bot.batch_sample(obs, members)
    series = {v: BotSeries.from_values(v, values[v], bins) for v in bot.SAMPLE_VARIANTS}
    config = {
        "mode": plan.mode,
        "n_sub": plan.n_sub,
        "member_selection": plan.member_selection,
        "holdout": plan.holdout,
        "dataset": {
            "cases": dataset.n_cases,
            "members": dataset.n_members,
            "dim": dataset.dim,
        },
    }
    return ExperimentReport(
        config=config,
        n_cases=dataset.n_cases,
        seed=plan.seed,
        stream_index=SELECTION_OFFSET,
        series=series,
    )


def bias_diagnostics(dataset: VerificationDataset) -> np.ndarray:
    """Mean error of the ensemble mean over mean ensemble spread, per dimension."""
    if dataset.obs is None:
        raise MissingObservation("bias diagnostics require observations")
    if dataset.n_cases == 0:
        raise EmptySample("bias diagnostics of an empty dataset")
    mean_err = (dataset.members.mean(axis=1) - dataset.obs).mean(axis=0)
    mean_sd = dataset.members.std(axis=1, ddof=1).mean(axis=0)
    return mean_err / mean_sd
