from __future__ import annotations

import numpy as np
from hypothesis import given, settings, strategies as st

from malicebench import Dataset, io


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 40), st.integers(1, 6))
def test_csv_and_jsonl_roundtrip_bit_exact(tmp_path_factory, seed, n, d):
    rng = np.random.default_rng(seed)
    S = Dataset(rng.standard_normal((n, d)) * 10.0 ** rng.integers(-8, 8, (n, d)),
                np.where(rng.random(n) < 0.5, 1, -1), rng.random(n) < 0.3)
    tmp = tmp_path_factory.mktemp("io")
    io.write_dataset_csv(S, tmp / "a.csv")
    io.write_dataset_jsonl(S, tmp / "a.jsonl")
    for path in (tmp / "a.csv", tmp / "a.jsonl"):
        back = io.read_dataset(path)
        assert back == S
        assert back.X.tobytes() == S.X.tobytes()


def test_vector_roundtrip(tmp_path):
    v = np.random.default_rng(0).random(17)
    io.write_vector_csv(v, tmp_path / "q.csv")
    assert io.read_vector_csv(tmp_path / "q.csv").tobytes() == v.tobytes()
