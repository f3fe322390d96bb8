import struct

import numpy as np
import pytest

from ntnet.checkpoint import CheckpointError, ModelCheckpoint, build_model, from_model, params_digest
from ntnet.nets import Denoiser, Translator
from ntnet.rand import Prng
from ntnet.tensor import Tensor


def perturbed(model, seed=0):
    rng = np.random.default_rng(seed)
    for p in model.parameters():
        p.data = (p.data + 0.1 * rng.standard_normal(p.shape)).astype(np.float32)
    return model


def test_round_trip_byte_identical(tmp_path):
    tr = perturbed(Translator(Prng(0), sigma_tilde=50.0))
    ck = from_model(tr, "translator", {"seed": 3}, iteration=12, meta={"note": "x"})
    ck.save(tmp_path / "a.ntnt")
    loaded = ModelCheckpoint.load(tmp_path / "a.ntnt")
    loaded.save(tmp_path / "b.ntnt")
    assert (tmp_path / "a.ntnt").read_bytes() == (tmp_path / "b.ntnt").read_bytes()
    assert loaded.manifest() == ck.manifest()
    rebuilt = build_model(loaded)
    assert params_digest(rebuilt) == params_digest(tr)
    assert rebuilt.sigma_tilde == 50.0
    x = Tensor(np.random.default_rng(1).uniform(size=(1, 3, 8, 8)).astype(np.float32))
    np.testing.assert_array_equal(rebuilt(x, Prng(4)).data, tr(x, Prng(4)).data)


def test_layout_and_payload_length():
    den = Denoiser(Prng(0), width=4, depth=1)
    blob = from_model(den, "denoiser").to_bytes()
    magic, version, mlen = struct.unpack_from("<4sIQ", blob)
    assert magic == b"NTNT" and version == 1
    n = sum(p.size for p in den.parameters())
    assert len(blob) - 16 - mlen == 4 * n


def test_corrupt_checkpoints_rejected():
    blob = from_model(Denoiser(Prng(0), width=4, depth=1), "denoiser").to_bytes()
    with pytest.raises(CheckpointError):
        ModelCheckpoint.from_bytes(b"XXXX" + blob[4:])
    with pytest.raises(CheckpointError):
        ModelCheckpoint.from_bytes(blob[:-4])
    with pytest.raises(CheckpointError):
        ModelCheckpoint.from_bytes(blob[:10])
    with pytest.raises(CheckpointError):
        build_model(ModelCheckpoint("other", {}, {}))
