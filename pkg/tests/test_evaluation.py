import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sparse_imputation.config import DEFAULT_SHIFTS, PipelineConfig, SweepConfig
from sparse_imputation.dictionary import build_dictionary
from sparse_imputation.evaluation import (CSV_COLUMNS, CorpusNotFoundError, SweepRow, aggregate,
                                          load_entries, run_sweep, score)
from sparse_imputation.masks import MaskStats
from sparse_imputation.spim import write_spim
from sparse_imputation.synthetic import speech_corpus, write_corpus

import oracles

HEADER = ("noise_type,snr_db,mask_type,shift_frames,n_utterances,unreliable_rmse,"
          "overall_rmse,imputation_snr_db,reliable_cells,unreliable_cells,reliable_pct,"
          "false_reliable_pct\n")


def test_perfect_reconstruction():
    t = np.random.default_rng(0).random((3, 4))
    m = score(t, t, np.zeros((3, 4)))
    assert m.unreliable_rmse == 0 and m.overall_rmse == 0
    assert m.imputation_snr_db == math.inf


def test_constant_offset():
    t = np.zeros((2, 10))
    mask = np.ones((2, 10))
    mask[0] = 0
    imputed = t.copy()
    imputed[0] += 1.0
    m = score(t, imputed, mask)
    assert m.unreliable_rmse == pytest.approx(1.0)
    assert m.unreliable_cells == 10 and m.reliable_cells == 10


def test_matches_loop_oracle():
    r = np.random.default_rng(4)
    t, i = r.random((4, 4)) * 3, r.random((4, 4)) * 3
    mask = (r.random((4, 4)) < 0.5).astype(float)
    mask[0, 0] = 0
    m = score(t, i, mask)
    ref = oracles.score_loops(t.tolist(), i.tolist(), mask.tolist(), math.log(1e-10))
    assert abs(m.unreliable_rmse - ref[0]) < 1e-12
    assert abs(m.overall_rmse - ref[1]) < 1e-12
    assert abs(m.imputation_snr_db - ref[2]) < 1e-12


def test_floor_cells_leave_snr():
    t = np.array([[1.0, math.log(1e-10)]])
    i = np.array([[0.5, 5.0]])
    mask = np.zeros((1, 2))
    m = score(t, i, mask)
    only = score(t[:, :1], i[:, :1], mask[:, :1])
    assert m.imputation_snr_db == pytest.approx(only.imputation_snr_db)


def test_no_unreliable_cells():
    t = np.ones((2, 2))
    m = score(t, t + 0.5, np.ones((2, 2)))
    assert m.unreliable_rmse is None and m.imputation_snr_db is None
    assert m.overall_rmse == pytest.approx(0.5)


def test_score_shape_check():
    with pytest.raises(ValueError):
        score(np.ones((2, 2)), np.ones((2, 3)), np.ones((2, 2)))


@given(seed=st.integers(0, 10_000), c=st.floats(-50, 50))
def test_rmse_shift_invariance(seed, c):
    r = np.random.default_rng(seed)
    t, i = r.random((3, 5)), r.random((3, 5))
    mask = (r.random((3, 5)) < 0.5).astype(float)
    mask[0, 0] = 0
    a, b = score(t, i, mask), score(t + c, i + c, mask)
    assert b.unreliable_rmse == pytest.approx(a.unreliable_rmse, abs=1e-9)
    assert b.overall_rmse == pytest.approx(a.overall_rmse, abs=1e-9)


def test_aggregate_is_mean_of_utterances():
    r = np.random.default_rng(1)
    per = []
    for _ in range(7):
        t, i = r.random((3, 6)), r.random((3, 6))
        mask = (r.random((3, 6)) < 0.5).astype(float)
        mask[0, 0] = 0
        per.append((score(t, i, mask), MaskStats(r.random() * 100, r.random())))
    row = aggregate("n", 0, "oracle", 1, per)
    assert abs(row.unreliable_rmse - np.mean([m.unreliable_rmse for m, _ in per])) < 1e-12
    assert abs(row.overall_rmse - np.mean([m.overall_rmse for m, _ in per])) < 1e-12
    assert abs(row.reliable_pct - np.mean([s.reliable_pct for _, s in per])) < 1e-12
    assert row.unreliable_cells == sum(m.unreliable_cells for m, _ in per)
    assert row.n_utterances == 7


def test_csv_columns_follow_row_fields():
    names = tuple(f.name for f in dataclasses.fields(SweepRow) if f.name != "per_utterance")
    assert names == CSV_COLUMNS
    assert ",".join(CSV_COLUMNS) + "\n" == HEADER


def test_csv_formatting():
    row = SweepRow("babble", 5.0, "oracle", 10, 2, None, 1.23456789, -3.0, 10, 0, 100.0, 0.0)
    assert row.csv_fields() == ["babble", "5.000000", "oracle", "10", "2", "nan", "1.234568",
                                "-3.000000", "10", "0", "100.000000", "0.000000"]


@pytest.fixture(scope="module")
def tiny_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    paths = write_corpus(root, n_test=3, n_train=8, K=6, noise_kinds=("stationary", "babble"),
                         noise_frames=400, seed=2)
    return paths


def sweep_cfg(paths, **over):
    sw = dict(speech=paths["speech"], train=paths["train"], noise=paths["noise"],
              snr_db=[0.0], shifts=[1, 10], mask_types=["oracle", "threshold", "corrected"])
    sw.update(over)
    cfg = PipelineConfig(sweep=SweepConfig(**sw))
    cfg.dictionary.n_atoms = 60
    cfg.dictionary.fragment_frames = 10
    return cfg


def test_single_utterance_single_row(tiny_corpus, tmp_path):
    one = tmp_path / "one"
    one.mkdir()
    write_spim(one / "u.spim", speech_corpus(1, K=6, seed=9)[0])
    cfg = sweep_cfg(tiny_corpus, speech=str(one), noise={"stationary": tiny_corpus["noise"]["stationary"]},
                    shifts=[5], mask_types=["oracle"])
    report = run_sweep(cfg)
    assert len(report.rows) == 1
    assert report.rows[0].n_utterances == 1


def test_sweep_rows_sorted_and_deterministic(tiny_corpus, tmp_path):
    cfg = sweep_cfg(tiny_corpus, snr_db=[5.0, 0.0])
    a, b = run_sweep(cfg), run_sweep(cfg)
    keys = [(r.mask_type, r.snr_db, r.shift_frames, r.noise_type) for r in a.rows]
    order = {"oracle": 0, "threshold": 1, "corrected": 2}
    assert keys == sorted(keys, key=lambda k: (order[k[0]], k[1], k[2], k[3]))
    assert len(a.rows) == 3 * 2 * 2 * 2
    a.write_csv(tmp_path / "a.csv")
    b.write_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.csv").read_text().startswith(HEADER)


def test_oracle_mask_keeps_more_cells_than_estimate(tiny_corpus):
    report = run_sweep(sweep_cfg(tiny_corpus, shifts=[10]))
    for noise in tiny_corpus["noise"]:
        oracle = report.row(noise_type=noise, mask_type="oracle")
        est = report.row(noise_type=noise, mask_type="threshold")
        fixed = report.row(noise_type=noise, mask_type="corrected")
        assert oracle.reliable_pct >= est.reliable_pct >= fixed.reliable_pct
        assert fixed.false_reliable_pct == 0.0


def test_prebuilt_dictionary_is_used(tiny_corpus):
    cfg = sweep_cfg(tiny_corpus, shifts=[10], mask_types=["oracle"])
    specs = [e for _, e in load_entries(tiny_corpus["train"])]
    d = build_dictionary(specs, 60, 10, seed=0)
    assert run_sweep(cfg, dictionary=d).rows[0].unreliable_rmse == \
        run_sweep(cfg).rows[0].unreliable_rmse


def test_subset_fraction(tiny_corpus):
    cfg = sweep_cfg(tiny_corpus, shifts=[10], mask_types=["oracle"], subset_fraction=0.5)
    assert {r.n_utterances for r in run_sweep(cfg).rows} == {2}


def test_unreadable_entries_are_skipped(tiny_corpus, tmp_path, caplog):
    d = tmp_path / "mixed"
    d.mkdir()
    write_spim(d / "good.spim", speech_corpus(1, K=6, seed=3)[0])
    (d / "bad.spim").write_bytes(b"nope")
    entries = load_entries(d)
    assert [i for i, _ in entries] == ["good"]
    assert "skipping" in caplog.text


def test_missing_corpus(tmp_path):
    with pytest.raises(CorpusNotFoundError):
        load_entries(tmp_path / "absent")
    (tmp_path / "empty").mkdir()
    with pytest.raises(CorpusNotFoundError):
        load_entries(tmp_path / "empty")


def test_all_entries_failing(tiny_corpus, tmp_path):
    short_noise = tmp_path / "n.spim"
    write_spim(short_noise, np.zeros((6, 3)))
    cfg = sweep_cfg(tiny_corpus, noise={"short": str(short_noise)}, shifts=[10],
                    mask_types=["oracle"])
    with pytest.raises(RuntimeError):
        run_sweep(cfg)


def test_reference_shift_grid_is_default():
    assert SweepConfig().shifts == [1, 5, 10, 15, 20, 25, 30, 35] == DEFAULT_SHIFTS
