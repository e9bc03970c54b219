import math

import numpy as np
import pytest

from rapidlearn import svc

from oracles import svc_dual_oracle


def separable_dataset():
    x = np.array([[0.0, 0.0], [0.2, 0.1], [0.1, 0.3], [-0.1, 0.1],
                  [3.0, 3.0], [3.2, 2.9], [2.8, 3.1], [3.1, 3.3]])
    y = np.array([-1, -1, -1, -1, 1, 1, 1, 1], dtype=float)
    return svc.Dataset(x, y)


def xor_dataset():
    x = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([-1, -1, 1, 1], dtype=float)
    return svc.Dataset(x, y)


# -- kernel -------------------------------------------------------------------


def test_rbf_kernel_known_value():
    # distance^2 = 1 at gamma = 0.5 -> exp(-0.5)
    assert svc.kernel_rbf(np.array([0.0, 0.0]), np.array([1.0, 0.0]), 0.5) \
        == pytest.approx(math.exp(-0.5), abs=1e-12)


def test_rbf_kernel_identity_and_symmetry():
    a, b = np.array([1.0, 2.0, 3.0]), np.array([-1.0, 0.5, 2.0])
    assert svc.kernel_rbf(a, a, 0.7) == 1.0
    assert svc.kernel_rbf(a, b, 0.7) == svc.kernel_rbf(b, a, 0.7)
    assert 0.0 < svc.kernel_rbf(a, b, 0.7) < 1.0


def test_rbf_kernel_validation():
    with pytest.raises(svc.DimensionMismatch):
        svc.kernel_rbf(np.zeros(2), np.zeros(3), 0.5)
    with pytest.raises(ValueError):
        svc.kernel_rbf(np.zeros(2), np.zeros(2), 0.0)


# -- scaler -------------------------------------------------------------------


def test_scaler_round_trip():
    x = np.array([[1.0, 10.0], [2.0, 20.0], [4.0, 40.0]])
    s = svc.Scaler.fit(x)
    z = s.transform(x)
    assert np.allclose(z.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(z.std(axis=0), 1.0, atol=1e-12)
    assert np.allclose(s.inverse_transform(z), x, atol=1e-12)


def test_scaler_constant_feature_sentinel():
    x = np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]])
    s = svc.Scaler.fit(x)
    assert s.stdev[0] == 1.0  # constant column: divide by 1, not 0
    z = s.transform(x)
    assert np.all(np.isfinite(z))
    assert np.allclose(z[:, 0], 0.0)


# -- training -----------------------------------------------------------------


def test_fit_separates_linearly_separable_data():
    model = svc.fit(separable_dataset(), seed=0)
    for row, label in zip(separable_dataset().features, separable_dataset().labels):
        assert svc.predict(model, row) == label


def test_fit_solves_xor():
    model = svc.fit(xor_dataset(), C=10.0, gamma=1.0, seed=0)
    for row, label in zip(xor_dataset().features, xor_dataset().labels):
        assert svc.predict(model, row) == label


def test_dual_constraints_hold():
    model = svc.fit(separable_dataset(), seed=0)
    assert np.all(np.abs(model.coeffs) <= model.C + 1e-12)
    assert abs(float(np.sum(model.coeffs))) <= svc.DUAL_EQ_TOL


def test_margin_kkt_conditions():
    ds = separable_dataset()
    model = svc.fit(ds, tol=1e-6, seed=0)
    scaled = model.scaler.transform(ds.features)
    sv_rows = {tuple(r) for r in model.support_vectors}
    for z, label in zip(scaled, ds.labels):
        d = model.support_vectors - z
        margin = label * float(
            model.coeffs @ np.exp(-model.gamma * np.sum(d * d, axis=1))
            + model.bias)
        if tuple(z) not in sv_rows:
            assert margin >= 1.0 - 1e-4   # non-support points sit outside
    # free support vectors (0 < alpha < C) sit on the margin
    free = np.abs(model.coeffs) < model.C * (1 - 1e-9)
    for z, coeff in zip(model.support_vectors[free], model.coeffs[free]):
        d = model.support_vectors - z
        margin = math.copysign(1.0, coeff) * float(
            model.coeffs @ np.exp(-model.gamma * np.sum(d * d, axis=1))
            + model.bias)
        assert margin == pytest.approx(1.0, abs=1e-4)


def test_fit_is_seed_deterministic():
    a = svc.fit(separable_dataset(), seed=5)
    b = svc.fit(separable_dataset(), seed=5)
    assert np.array_equal(a.coeffs, b.coeffs)
    assert np.array_equal(a.support_vectors, b.support_vectors)
    assert a.bias == b.bias


def test_fit_rejects_single_class():
    x = np.zeros((4, 2))
    with pytest.raises(svc.DegenerateDataset):
        svc.fit(svc.Dataset(x, np.ones(4)))


def test_fit_rejects_non_finite_features():
    x = np.array([[0.0, 1.0], [np.nan, 2.0]])
    with pytest.raises(svc.NonFiniteFeature):
        svc.fit(svc.Dataset(x, np.array([1.0, -1.0])))


def test_decision_values_match_dual_oracle():
    ds = separable_dataset()
    model = svc.fit(ds, tol=1e-6, seed=0)
    _, oracle_values = svc_dual_oracle(ds.features, ds.labels, C=10.0, gamma=0.5)
    got = np.array([svc.decision_value(model, row) for row in ds.features])
    assert np.max(np.abs(got - oracle_values)) < 1e-4


def test_tie_at_zero_classifies_legit():
    model = svc.fit(separable_dataset(), seed=0)
    # construct an input with decision value exactly zero via bias shift
    x = separable_dataset().features[0]
    shifted = svc.SvcModel(gamma=model.gamma, C=model.C,
                           support_vectors=model.support_vectors,
                           coeffs=model.coeffs,
                           bias=model.bias - svc.decision_value(model, x),
                           scaler=model.scaler)
    assert svc.decision_value(shifted, x) == 0.0
    assert svc.predict(shifted, x) == -1


# -- evaluation ---------------------------------------------------------------


def test_evaluate_confusion_counts():
    ds = separable_dataset()
    model = svc.fit(ds, seed=0)
    report = svc.evaluate(model, ds)
    assert (report.tp, report.fp, report.tn, report.fn) == (4, 0, 4, 0)
    assert report.precision == 1.0
    assert report.recall == 1.0
    assert report.accuracy == 1.0


def test_evaluate_zero_denominators():
    report = svc.EvalReport(tp=0, fp=0, tn=3, fn=2)
    assert report.precision is None
    assert report.recall == 0.0
    assert svc.EvalReport(0, 0, 0, 0).accuracy is None


# -- persistence --------------------------------------------------------------


def test_model_round_trip_bit_exact(tmp_path):
    ds = separable_dataset()
    model = svc.fit(ds, seed=0)
    path = tmp_path / "m.svc"
    svc.save_model(model, str(path))
    loaded = svc.load_model(str(path))
    assert loaded.gamma == model.gamma
    assert loaded.C == model.C
    assert loaded.bias == model.bias
    assert np.array_equal(loaded.coeffs, model.coeffs)
    assert np.array_equal(loaded.support_vectors, model.support_vectors)
    assert np.array_equal(loaded.scaler.mean, model.scaler.mean)
    assert np.array_equal(loaded.scaler.stdev, model.scaler.stdev)
    for row in ds.features:
        assert svc.decision_value(loaded, row) == svc.decision_value(model, row)


def test_save_twice_identical_bytes(tmp_path):
    model = svc.fit(separable_dataset(), seed=0)
    p1, p2 = tmp_path / "a.svc", tmp_path / "b.svc"
    svc.save_model(model, str(p1))
    svc.save_model(model, str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_truncated_model_file_rejected(tmp_path):
    model = svc.fit(separable_dataset(), seed=0)
    path = tmp_path / "m.svc"
    svc.save_model(model, str(path))
    lines = path.read_text().splitlines()
    for cut in (3, 7, len(lines) - 1):
        (tmp_path / "cut.svc").write_text("\n".join(lines[:cut]) + "\n")
        with pytest.raises(svc.MalformedModelFile):
            svc.load_model(str(tmp_path / "cut.svc"))


def test_corrupt_numeric_field_rejected(tmp_path):
    model = svc.fit(separable_dataset(), seed=0)
    path = tmp_path / "m.svc"
    svc.save_model(model, str(path))
    text = path.read_text().replace("gamma 0.5", "gamma banana")
    bad = tmp_path / "bad.svc"
    bad.write_text(text)
    with pytest.raises(svc.MalformedModelFile):
        svc.load_model(str(bad))


def test_coefficient_exceeding_c_rejected(tmp_path):
    model = svc.fit(separable_dataset(), C=1.0, seed=0)
    path = tmp_path / "m.svc"
    svc.save_model(model, str(path))
    lines = path.read_text().splitlines()
    parts = lines[8].split(" ")
    parts[0] = "5.0"  # |coeff| > C = 1.0
    lines[8] = " ".join(parts)
    bad = tmp_path / "bad.svc"
    bad.write_text("\n".join(lines) + "\n")
    with pytest.raises(svc.MalformedModelFile):
        svc.load_model(str(bad))


def test_unsupported_version_rejected(tmp_path):
    model = svc.fit(separable_dataset(), seed=0)
    path = tmp_path / "m.svc"
    svc.save_model(model, str(path))
    text = path.read_text().replace("version 1", "version 99", 1)
    bad = tmp_path / "bad.svc"
    bad.write_text(text)
    with pytest.raises(svc.MalformedModelFile):
        svc.load_model(str(bad))


def test_dimension_mismatch_at_predict():
    model = svc.fit(separable_dataset(), seed=0)
    with pytest.raises(svc.DimensionMismatch):
        svc.decision_value(model, np.zeros(5))
