import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isiamids import dataio
from isiamids.dataio import (ATTACK_ONLY, BINARY, FULL, DataError, LabelScheme, NumericTable, RawTable,
                             fit_codebook, fit_normalizer, load_csv, map_labels, normalize, quantize)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def table(rows, names=None):
    cells = np.array(rows, dtype=object)
    return RawTable(tuple(names or [f"c{i}" for i in range(cells.shape[1])]), cells)


class TestLoadCsv:
    def test_three_rows_of_42_cells(self, tmp_path):
        row = ",".join(["0"] * 41 + ["normal"])
        t = load_csv(write(tmp_path, "a.csv", "\n".join([row] * 3) + "\n"))
        assert t.n_rows == 3 and t.arity == 42

    def test_ragged_row_names_the_row(self, tmp_path):
        p = write(tmp_path, "r.csv", "1,2,3,x\n1,2,x\n1,2,3,x\n")
        with pytest.raises(DataError, match="ragged row 2"):
            load_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="cannot read"):
            load_csv(tmp_path / "nope.csv")

    def test_trailing_difficulty_dropped(self, tmp_path):
        names = dataio.NSLKDD_COLUMNS
        row = ",".join(["0"] * 41 + ["normal", "20"])
        t = load_csv(write(tmp_path, "d.csv", row + "\n"), column_names=names, optional_trailing="difficulty")
        assert t.arity == 42 and t.cells[0, -1] == "normal"

    def test_without_difficulty_kept(self, tmp_path):
        names = dataio.NSLKDD_COLUMNS
        row = ",".join(["0"] * 41 + ["normal"])
        t = load_csv(write(tmp_path, "d.csv", row + "\n"), column_names=names, optional_trailing="difficulty")
        assert t.arity == 42

    def test_header(self, tmp_path):
        t = load_csv(write(tmp_path, "h.csv", "a,b\n1,x\n2,y\n"), has_header=True)
        assert t.column_names == ("a", "b") and t.n_rows == 2

    def test_single_column_rejected(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(write(tmp_path, "s.csv", "1\n2\n"))


class TestCodebook:
    def test_first_occurrence_codes(self):
        cb = fit_codebook(table([["tcp", "a"], ["udp", "b"], ["tcp", "c"], ["icmp", "d"]]), [0])
        assert [cb.encode("c0", v) for v in ("tcp", "udp", "icmp")] == [1, 2, 3]

    def test_unseen_is_zero(self):
        cb = fit_codebook(table([["tcp", "a"], ["udp", "b"]]), [0])
        assert cb.encode("c0", "sctp") == 0

    def test_bad_column(self):
        with pytest.raises(DataError):
            fit_codebook(table([["tcp", "a"]]), [5])

    @given(st.lists(st.sampled_from(["tcp", "udp", "icmp", "sctp", "gre"]), min_size=1, max_size=30))
    def test_round_trip_and_contiguous(self, values):
        cb = fit_codebook(table([[v, "x"] for v in values]), ["c0"])
        codes = sorted({cb.encode("c0", v) for v in values})
        assert codes == list(range(1, len(set(values)) + 1))
        for v in values:
            assert cb.decode("c0", cb.encode("c0", v)) == v

    def test_meta_round_trip(self):
        cb = fit_codebook(table([["tcp", "a", "x"], ["udp", "b", "y"]]), [0, 1])
        again = dataio.CategoryCodebook.from_meta(cb.to_meta())
        assert again == cb


class TestQuantize:
    def test_lookup_and_unseen(self):
        train = table([["tcp", "1", "normal"], ["udp", "2", "neptune"]])
        cb = fit_codebook(train, [0])
        q = quantize(table([["udp", "3", "normal"], ["sctp", "4", "normal"]]), cb)
        np.testing.assert_array_equal(q.values, [[2, 3], [0, 4]])

    def test_non_numeric_cell(self):
        t = table([["tcp", "1", "n"], ["tcp", "oops", "n"]])
        with pytest.raises(DataError, match="'oops'.*'c1'.*row 2"):
            quantize(t, fit_codebook(t, [0]))

    def test_unit_suffix(self):
        t = table([["1.2 M", "n"], ["500", "n"], ["3K", "n"]])
        cb = fit_codebook(t, [])
        np.testing.assert_allclose(quantize(t, cb, unit_suffix=True).values[:, 0], [1.2e6, 500, 3000])
        with pytest.raises(DataError):
            quantize(t, cb, unit_suffix=False)

    def test_non_finite(self):
        t = table([["nan", "n"]])
        with pytest.raises(DataError, match="non-finite"):
            quantize(t, fit_codebook(t, []))


class TestNormalize:
    @pytest.mark.parametrize("value, expected", [(5, 0.5), (0, 0.0), (10, 1.0), (12, 1.0), (-3, 0.0)])
    def test_scaling(self, value, expected):
        assert normalize(value, 0, 10) == expected

    def test_degenerate(self):
        assert normalize(7, 7, 7) == 0.0

    def test_fit(self):
        stats = fit_normalizer(NumericTable(("a", "b"), np.array([[0.0, 7], [5, 7], [10, 7]]), np.array(["x"] * 3)))
        np.testing.assert_array_equal(stats.v_min, [0, 7])
        np.testing.assert_array_equal(stats.v_max, [10, 7])
        np.testing.assert_array_equal(stats.degenerate, [False, True])

    def test_test_time_uses_train_stats(self):
        train = NumericTable(("a",), np.array([[0.0], [10.0]]), np.array(["x", "x"]))
        stats = fit_normalizer(train)
        test = NumericTable(("a",), np.array([[20.0], [5.0]]), np.array(["x", "x"]))
        np.testing.assert_array_equal(stats.transform(test).values[:, 0], [1.0, 0.5])

    @given(st.lists(st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3), min_size=1, max_size=20))
    def test_idempotent_range(self, rows):
        values = np.array(rows)
        stats = fit_normalizer(NumericTable(("a", "b", "c"), values, np.array(["x"] * len(rows))))
        once = stats.apply(values)
        assert np.all((once >= 0) & (once <= 1))
        again = fit_normalizer(NumericTable(("a", "b", "c"), once, np.array(["x"] * len(rows)))).apply(once)
        assert np.all((again >= 0) & (again <= 1))


NSL = dataio.builtin_mapping("nslkdd")
CIDDS = dataio.builtin_mapping("cidds")


class TestLabels:
    def test_binary(self):
        s = LabelScheme.from_mapping(BINARY, NSL)
        assert [s.index_of(r) for r in ("normal", "neptune", "smurf")] == [0, 1, 1]
        assert s.index_of("never-seen-attack") == 1

    def test_nslkdd_full(self):
        assert LabelScheme.from_mapping(FULL, NSL).class_names == ("Normal", "DoS", "Probe", "R2L", "U2R")

    def test_cidds_attack_only(self):
        s = LabelScheme.from_mapping(ATTACK_ONLY, CIDDS)
        assert s.class_names == ("DoS", "PortScan", "PingScan", "BruteForce")
        assert s.index_of("---") == -1

    def test_unknown_label_multiclass(self):
        with pytest.raises(DataError, match="'mystery'"):
            LabelScheme.from_mapping(FULL, NSL).index_of("mystery")

    def test_nslkdd_mapping_covers_all_types(self):
        from isiamids.synth import NSL_TEST_COUNTS, NSL_TRAIN_COUNTS
        assert set(NSL_TRAIN_COUNTS) | set(NSL_TEST_COUNTS) <= set(NSL)
        assert len([k for k in NSL_TRAIN_COUNTS if k != "normal"]) == 22

    def test_map_labels_attack_only_drops_normal(self):
        nt = NumericTable(("a",), np.array([[0.1], [0.2], [0.3]]), np.array(["normal", "satan", "perl"], dtype=object))
        fm = map_labels(nt, LabelScheme.from_mapping(ATTACK_ONLY, NSL))
        assert fm.n == 2 and list(fm.y) == [1, 3]

    @given(st.lists(st.sampled_from(sorted(NSL)), min_size=1, max_size=40))
    def test_binary_partition(self, raws):
        nt = NumericTable(("a",), np.zeros((len(raws), 1)), np.array(raws, dtype=object))
        fm = map_labels(nt, LabelScheme.from_mapping(BINARY, NSL))
        assert (fm.y == 0).sum() + (fm.y == 1).sum() == fm.n

    def test_mapping_file_parse(self):
        m = dataio.read_family_mapping(text="# families\nnormal Normal\nfoo DoS  # trailing\n")
        assert m == {"normal": "Normal", "foo": "DoS"}
        with pytest.raises(DataError, match="twice"):
            dataio.read_family_mapping(text="normal Normal\nfoo DoS\nfoo Probe\n")

    def test_feature_matrix_range(self):
        with pytest.raises(DataError):
            dataio.FeatureMatrix(np.array([[1.5]]), np.array([0]), ("a",))


@pytest.fixture(scope="module")
def small_nsl(tmp_path_factory):
    from isiamids import synth
    return synth.write_dataset("nslkdd", tmp_path_factory.mktemp("nsl"), seed=5, scale=0.02)


class TestPreprocessing:
    def test_cells_in_unit_interval_and_numeric(self, small_nsl):
        prof = dataio.PROFILES["nslkdd"]
        tr, te = prof.read(small_nsl[0]), prof.read(small_nsl[1])
        prep = dataio.Preprocessor.fit(prof, tr)
        for fm in (prep.transform(tr), prep.transform(te)):
            assert fm.X.shape[1] == 41
            assert np.all((fm.X >= 0) & (fm.X <= 1))

    def test_byte_identical_dataset_files(self, small_nsl, tmp_path):
        prof = dataio.PROFILES["nslkdd"]
        digests = []
        for i in range(2):
            tr = prof.read(small_nsl[0])
            prep = dataio.Preprocessor.fit(prof, tr)
            digests.append(dataio.save_dataset(tmp_path / f"{i}.ds", prep.transform(tr), prep, "train"))
        assert digests[0] == digests[1]
        assert (tmp_path / "0.ds").read_bytes() == (tmp_path / "1.ds").read_bytes()

    def test_dataset_round_trip(self, small_nsl, tmp_path):
        prof = dataio.PROFILES["nslkdd"]
        tr = prof.read(small_nsl[0])
        prep = dataio.Preprocessor.fit(prof, tr)
        fm = prep.transform(tr)
        dataio.save_dataset(tmp_path / "t.ds", fm, prep, "train")
        back = dataio.load_dataset(tmp_path / "t.ds")
        np.testing.assert_array_equal(back.data.X, fm.X)
        np.testing.assert_array_equal(back.data.y, fm.y)
        assert back.prep.fingerprint() == prep.fingerprint()
        assert back.data.class_names == ("Normal", "DoS", "Probe", "R2L", "U2R")

    def test_cidds_layout(self, tmp_path):
        from isiamids import synth
        tr, te = synth.write_dataset("cidds", tmp_path, seed=2, scale=0.01)
        prof = dataio.PROFILES["cidds"]
        raw = prof.read(tr)
        assert "class" not in raw.column_names and "attackID" not in raw.column_names
        prep = dataio.Preprocessor.fit(prof, raw)
        assert set(prep.codebook.column_names) == {"Date first seen", "Proto", "Src IP Addr", "Dst IP Addr", "Flags"}
        fm = prep.transform(prof.read(te))
        assert fm.X.shape[1] == 12 and fm.class_names == ("Normal", "DoS", "PortScan", "PingScan", "BruteForce")
