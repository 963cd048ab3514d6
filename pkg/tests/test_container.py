import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from isiamids import container
from isiamids.container import ContainerError


@given(hnp.arrays(st.sampled_from([np.float64, np.float32, np.int32, np.int64, np.int8]),
                  hnp.array_shapes(min_dims=0, max_dims=3, max_side=5)))
def test_bit_exact_round_trip(arr):
    meta, arrays = container.loads(container.dumps("k", {"a": [1, 2]}, {"x": arr}))
    assert meta == {"a": [1, 2]}
    assert arrays["x"].dtype == arr.dtype and arrays["x"].shape == arr.shape
    assert arrays["x"].tobytes() == np.ascontiguousarray(arr).tobytes()


def test_deterministic_bytes():
    a = container.dumps("k", {"b": 1, "a": 2}, {"w": np.arange(4.0)})
    b = container.dumps("k", {"a": 2, "b": 1}, {"w": np.arange(4.0)})
    assert a == b


def test_big_endian_normalized():
    be = np.arange(3, dtype=">f8")
    _, arrays = container.loads(container.dumps("k", {}, {"x": be}))
    np.testing.assert_array_equal(arrays["x"], be)


@pytest.mark.parametrize("blob", [b"", b"garbage\n{}", b"ISIAMIDS-CONTAINER 9\n{}\n"])
def test_rejects_foreign_bytes(blob):
    with pytest.raises(ContainerError):
        container.loads(blob)


def test_kind_checked():
    with pytest.raises(ContainerError, match="expected"):
        container.loads(container.dumps("gbt", {}), kind="mlp")


def test_truncated_payload():
    blob = container.dumps("k", {}, {"x": np.arange(10.0)})
    with pytest.raises(ContainerError, match="truncated"):
        container.loads(blob[:-8])


def test_object_arrays_refused():
    with pytest.raises(ContainerError):
        container.dumps("k", {}, {"x": np.array(["a", None], dtype=object)})


def test_save_returns_digest(tmp_path):
    import hashlib
    digest = container.save(tmp_path / "f", "k", {}, {"x": np.ones(2)})
    assert digest == hashlib.sha256((tmp_path / "f").read_bytes()).hexdigest()
