import numpy as np
import pytest

from kadbaym import BOSON, FERMION
from kadbaym.containerio import (ContainerError, export_csv, list_groups,
                                 read_container, read_csv, write_container,
                                 write_groups)
from kadbaym.contour import HermMatrix


def random_herm(nt, ntau, d, sig=FERMION, seed=0):
    C = HermMatrix(nt, ntau, d, sig)
    rng = np.random.default_rng(seed)
    for arr in (C.mat, C.ret, C.les, C.tv):
        arr[:] = rng.standard_normal(arr.shape) + 1j * rng.standard_normal(arr.shape)
    return C


def test_roundtrip_bit_exact(tmp_path):
    C = random_herm(9, 13, 2, seed=4)
    path = tmp_path / "g.kbc"
    write_container(path, "g", C)
    D = read_container(path, "g")
    assert (D.nt, D.ntau, D.d, D.sig) == (C.nt, C.ntau, C.d, C.sig)
    for comp in ("mat", "ret", "les", "tv"):
        assert np.array_equal(getattr(C, comp), getattr(D, comp)), comp


def test_reference_dataset_counts(tmp_path):
    # nt=200, ntau=400, d=1 must give les/ret = 20301, mat = 401, tv = 80601
    C = HermMatrix(200, 400, 1, FERMION)
    path = tmp_path / "ref.kbc"
    write_container(path, "g", C)
    import json
    with open(path, "rb") as fh:
        fh.readline()
        hlen = int(fh.readline())
        manifest = json.loads(fh.read(hlen))
    ds = manifest["groups"]["g"]["datasets"]
    assert ds["les"]["count"] == 20301
    assert ds["ret"]["count"] == 20301
    assert ds["mat"]["count"] == 401
    assert ds["tv"]["count"] == 80601


def test_matsubara_only(tmp_path):
    C = random_herm(-1, 16, 1, seed=1)
    path = tmp_path / "m.kbc"
    write_container(path, "g", C)
    D = read_container(path)
    assert D.nt == -1
    assert D.ret.shape[0] == 0 and D.tv.shape[0] == 0
    assert np.array_equal(C.mat, D.mat)


def test_multiple_groups(tmp_path):
    A = random_herm(5, 8, 1, seed=2)
    B = random_herm(5, 8, 2, BOSON, seed=3)
    path = tmp_path / "two.kbc"
    write_groups(path, {"G": A, "Sigma": B})
    assert list_groups(path) == ["G", "Sigma"]
    assert np.array_equal(read_container(path, "Sigma").tv, B.tv)
    with pytest.raises(ContainerError):
        read_container(path)  # ambiguous group
    with pytest.raises(ContainerError):
        read_container(path, "nope")


def test_malformed_rejected(tmp_path):
    path = tmp_path / "bad.kbc"
    path.write_bytes(b"not a container at all\n")
    with pytest.raises(ContainerError):
        read_container(path, "g")
    # corrupt the manifest length
    C = random_herm(3, 4, 1)
    good = tmp_path / "good.kbc"
    write_container(good, "g", C)
    data = good.read_bytes()
    bad2 = tmp_path / "bad2.kbc"
    bad2.write_bytes(data.replace(b'"nt":3', b'"nt":4'))
    with pytest.raises(ContainerError):
        read_container(bad2, "g")


def test_truncated_dataset(tmp_path):
    C = random_herm(4, 6, 1)
    path = tmp_path / "t.kbc"
    write_container(path, "g", C)
    data = path.read_bytes()
    path.write_bytes(data[:-64])
    with pytest.raises(ContainerError):
        read_container(path, "g")


def test_csv_roundtrip(tmp_path):
    path = tmp_path / "x.csv"
    rows = np.array([[1.0, 2.5e-13], [2.0, 3.25], [4.0, -1e30]])
    export_csv(path, ["x", "value"], rows)
    first = path.read_text().splitlines()[0]
    assert first == "x,value"
    header, back = read_csv(path)
    assert header == ["x", "value"]
    assert np.array_equal(back, rows)
    with pytest.raises(ValueError):
        export_csv(path, ["only_one"], rows)
