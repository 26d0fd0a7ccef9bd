"""Tests for dataset ingestion and the verification workflows."""

import json

import numpy as np
import pytest

from fairbot.bot import GaussianLaw
from fairbot.errors import (
    DomainError,
    EmptySample,
    MissingObservation,
    NonFiniteValue,
    ParseError,
    SchemaError,
    SubsampleTooLarge,
    TooFewMembers,
)
from fairbot.scenarios import ar1_covariance
from fairbot.verifydata import (
    VerificationDataset,
    VerifyPlan,
    bias_diagnostics,
    load_dataset,
    run_verification,
    synth_dataset,
    validate_plan,
    write_jsonl,
)


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def small_jsonl(path, n_cases=2, with_obs=True):
    lines = []
    for i in range(n_cases):
        record = {
            "case": f"c{i}",
            "obs": [0.1 * i, 0.2] if with_obs else None,
            "members": [[0.0, 0.0], [1.0, 0.5], [0.5, 1.0]],
        }
        lines.append(json.dumps(record))
    write_lines(path, lines)
    return path


class TestLoadJsonl:
    def test_happy_path(self, tmp_path):
        path = small_jsonl(tmp_path / "d.jsonl")
        ds = load_dataset(path, "jsonl")
        assert ds.n_cases == 2
        assert ds.n_members == 3
        assert ds.dim == 2
        assert ds.obs is not None

    def test_wrong_member_length_names_case(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_lines(path, [
            json.dumps({"case": "good", "obs": None, "members": [[0, 0], [1, 1], [2, 2]]}),
            json.dumps({"case": "bad", "obs": None, "members": [[0, 0], [1, 1, 9], [2, 2]]}),
        ])
        with pytest.raises(SchemaError, match="bad"):
            load_dataset(path, "jsonl")

    def test_parse_error_reports_line(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_lines(path, ['{"case": "a", "members": [[0],[1]]}', "{nope"])
        with pytest.raises(ParseError, match=":2"):
            load_dataset(path, "jsonl")

    def test_nonfinite_rejected(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_lines(path, [json.dumps({"case": "a", "obs": None,
                                       "members": [[0.0], [float("nan")]]})])
        with pytest.raises(NonFiniteValue):
            load_dataset(path, "jsonl")

    def test_mixed_obs_rejected(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_lines(path, [
            json.dumps({"case": "a", "obs": [0.0], "members": [[0.0], [1.0]]}),
            json.dumps({"case": "b", "obs": None, "members": [[0.0], [1.0]]}),
        ])
        with pytest.raises(SchemaError, match="b"):
            load_dataset(path, "jsonl")

    def test_manifest_line_skipped(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_lines(path, [
            json.dumps({"manifest": {"tool_version": "x"}}),
            json.dumps({"case": "a", "obs": None, "members": [[0.0], [1.0]]}),
        ])
        assert load_dataset(path, "jsonl").n_cases == 1

    def test_inconsistent_member_count(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_lines(path, [
            json.dumps({"case": "a", "obs": None, "members": [[0.0], [1.0]]}),
            json.dumps({"case": "b", "obs": None, "members": [[0.0], [1.0], [2.0]]}),
        ])
        with pytest.raises(SchemaError):
            load_dataset(path, "jsonl")

    def test_unknown_format(self, tmp_path):
        with pytest.raises(DomainError):
            load_dataset(small_jsonl(tmp_path / "d.jsonl"), "parquet")


class TestLoadCsv:
    def test_happy_path(self, tmp_path):
        path = tmp_path / "d.csv"
        write_lines(path, [
            "case,role,v1,v2",
            "c0,obs,0.5,0.25",
            "c0,m1,0.0,0.0",
            "c0,m2,1.0,1.0",
            "c1,obs,0.1,0.2",
            "c1,m1,0.3,0.4",
            "c1,m2,0.5,0.6",
        ])
        ds = load_dataset(path, "csv")
        assert ds.n_cases == 2 and ds.n_members == 2 and ds.dim == 2
        assert np.allclose(ds.obs[0], [0.5, 0.25])

    def test_role_gap_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        write_lines(path, [
            "case,role,v1",
            "c0,m1,0.0",
            "c0,m3,1.0",
        ])
        with pytest.raises(SchemaError):
            load_dataset(path, "csv")

    def test_non_numeric_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        write_lines(path, ["case,role,v1", "c0,m1,zero"])
        with pytest.raises(ParseError, match=":2"):
            load_dataset(path, "csv")


class TestSynth:
    def test_minimal(self):
        law = GaussianLaw(np.zeros(2), np.eye(2))
        ds = synth_dataset(law, n_cases=1, n_members=2, seed=0)
        assert ds.n_cases == 1 and ds.n_members == 2

    def test_determinism(self):
        law = GaussianLaw(np.zeros(3), ar1_covariance(3, 1.0, 0.6))
        a = synth_dataset(law, 10, 5, seed=9)
        b = synth_dataset(law, 10, 5, seed=9)
        assert np.array_equal(a.members, b.members)
        assert np.array_equal(a.obs, b.obs)

    def test_pooled_member_covariance(self):
        # law-of-large-numbers oracle over 1e5 pooled members
        cov = ar1_covariance(2, 1.0, 0.6)
        law = GaussianLaw(np.zeros(2), cov)
        ds = synth_dataset(law, n_cases=2000, n_members=50, seed=10)
        pooled = ds.members.reshape(-1, 2)
        assert pooled.shape[0] == 100_000
        assert np.max(np.abs(np.cov(pooled.T) - cov)) < 0.02

    def test_round_trip_bit_exact(self, tmp_path):
        law = GaussianLaw(np.zeros(3), ar1_covariance(3, 1.0, 0.6))
        ds = synth_dataset(law, 25, 6, seed=11)
        path = tmp_path / "synth.jsonl"
        write_jsonl(ds, path, manifest_record={"note": "round trip"})
        back = load_dataset(path, "jsonl")
        assert back.case_ids == ds.case_ids
        assert np.array_equal(back.members, ds.members)
        assert np.array_equal(back.obs, ds.obs)

    def test_member_shift(self):
        law = GaussianLaw(np.zeros(2), np.eye(2))
        ds = synth_dataset(law, 4000, 10, seed=12, member_shift=0.5)
        gap = ds.members.mean(axis=(0, 1)) - ds.obs.mean(axis=0)
        assert np.all(np.abs(gap - 0.5) < 0.05)

    def test_too_few_members(self):
        law = GaussianLaw(np.zeros(2), np.eye(2))
        with pytest.raises(TooFewMembers):
            synth_dataset(law, 5, 1, seed=0)


def synth(p=4, n_cases=4000, members=20, seed=100, shift=None, rho=0.6):
    law = GaussianLaw(np.zeros(p), ar1_covariance(p, 1.0, rho))
    return synth_dataset(law, n_cases, members, seed=seed, member_shift=shift)


class TestPlanValidation:
    def test_subsample_too_large_in_perfect_mode(self):
        ds = synth(p=2, n_cases=5, members=8)
        with pytest.raises(SubsampleTooLarge):
            validate_plan(ds, VerifyPlan(mode="perfect_reliability", n_sub=8))

    def test_subsample_fits_against_observation(self):
        ds = synth(p=2, n_cases=5, members=8)
        validate_plan(ds, VerifyPlan(mode="against_observation", n_sub=8))

    def test_needs_more_members_than_dims(self):
        ds = synth(p=4, n_cases=5, members=8)
        with pytest.raises(TooFewMembers):
            validate_plan(ds, VerifyPlan(mode="perfect_reliability", n_sub=4))

    def test_missing_obs(self):
        ds = synth(p=2, n_cases=5, members=8)
        stripped = VerificationDataset(ds.case_ids, ds.members, obs=None)
        with pytest.raises(MissingObservation):
            validate_plan(stripped, VerifyPlan(mode="against_observation", n_sub=4))

    def test_holdout_out_of_range(self):
        ds = synth(p=2, n_cases=5, members=8)
        with pytest.raises(DomainError):
            validate_plan(ds, VerifyPlan(mode="perfect_reliability", n_sub=4, holdout=8))

    def test_plan_field_validation(self):
        with pytest.raises(DomainError):
            VerifyPlan(mode="sideways", n_sub=4)
        with pytest.raises(DomainError):
            VerifyPlan(mode="perfect_reliability", n_sub=4, holdout="sometimes")


class TestRunVerification:
    def test_perfect_reliability_fair_uniform(self):
        ds = synth(p=4, n_cases=4000, members=20)
        report = run_verification(ds, VerifyPlan(mode="perfect_reliability", n_sub=16))
        assert set(report.series) == {"naive", "adjusted", "fair"}
        assert report.series["fair"].p_value > 0.001

    def test_biased_members_skew_fair_histogram(self):
        ds = synth(p=4, n_cases=4000, members=20, shift=0.5)
        report = run_verification(ds, VerifyPlan(mode="against_observation", n_sub=16))
        hist = report.series["fair"].histogram
        assert hist[:2].sum() > hist[-2:].sum()

    def test_first_n_ignores_unused_members(self):
        ds = synth(p=2, n_cases=50, members=12)
        plan = VerifyPlan(mode="perfect_reliability", n_sub=6, holdout=0)
        base = run_verification(ds, plan)
        # permute only members beyond holdout + n_sub
        members = ds.members.copy()
        members[:, 7:, :] = members[:, [11, 10, 9, 8, 7], :]
        permuted = VerificationDataset(ds.case_ids, members, ds.obs)
        again = run_verification(permuted, plan)
        for variant in base.series:
            assert np.array_equal(base.series[variant].values, again.series[variant].values)

    def test_random_selection_is_seeded(self):
        ds = synth(p=2, n_cases=30, members=12)
        plan = VerifyPlan(
            mode="perfect_reliability", n_sub=6, member_selection="random",
            holdout="random", seed=5,
        )
        a = run_verification(ds, plan)
        b = run_verification(ds, plan)
        for variant in a.series:
            assert np.array_equal(a.series[variant].values, b.series[variant].values)

    def test_small_subsample_rates(self):
        # perfect-reliability replications: fair stays at the nominal level
        # while naive and adjusted reject almost always when n_sub <= 2p
        p, n_sub = 3, 6
        rejected = {"naive": 0, "adjusted": 0, "fair": 0}
        reps = 100
        for r in range(reps):
            ds = synth(p=p, n_cases=1500, members=12, seed=7000 + r)
            report = run_verification(ds, VerifyPlan(mode="perfect_reliability", n_sub=n_sub))
            for variant in rejected:
                rejected[variant] += report.series[variant].p_value < 0.05
        assert 0.02 <= rejected["fair"] / reps <= 0.10
        assert rejected["naive"] / reps > 0.5
        assert rejected["adjusted"] / reps > 0.5


class TestBiasDiagnostics:
    def test_zero_when_obs_at_ensemble_mean(self):
        ds = synth(p=3, n_cases=20, members=10)
        centered = VerificationDataset(ds.case_ids, ds.members, ds.members.mean(axis=1))
        assert np.allclose(bias_diagnostics(centered), 0.0)

    def test_recovers_known_shift(self):
        n_cases = 5000
        ds = synth(p=2, n_cases=n_cases, members=30, shift=0.7, rho=0.0)
        values = bias_diagnostics(ds)
        se = np.sqrt((1.0 + 1.0 / 30) / n_cases)  # error variance of m - obs per case
        assert np.all(np.abs(values - 0.7) < 3 * se + 0.02)

    def test_missing_obs(self):
        ds = synth(p=2, n_cases=5, members=8)
        stripped = VerificationDataset(ds.case_ids, ds.members, obs=None)
        with pytest.raises(MissingObservation):
            bias_diagnostics(stripped)

    def test_empty_dataset(self):
        empty = VerificationDataset([], np.empty((0, 5, 2)), np.empty((0, 2)))
        with pytest.raises(EmptySample):
            bias_diagnostics(empty)
