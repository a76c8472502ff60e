import numpy as np
import pytest

from bw_layer import LayerState, Mode, finalize, forward_infer, forward_train
from checkpoint import (
    decode_layer_state,
    encode_layer_state,
    load_layer_state,
    load_sequence,
    save_layer_state,
    save_sequence,
)
from errors import ParseError, ValidationError
from transforms import WhiteningSpec


@pytest.fixture
def trained_state(rng):
    spec = WhiteningSpec(kind="itn", itn_iterations=3, group_size=2, estimation_object="whitening", recovery="coloring")
    state = LayerState.create(4, spec)
    for _ in range(3):
        forward_train(state, rng.standard_normal((4, 12)))
    state.color_w += 0.1
    return state


def test_layer_state_survives_a_file(trained_state, tmp_path, rng):
    finalize(trained_state)
    path = save_layer_state(tmp_path / "bw0.bwl", trained_state)
    loaded = load_layer_state(path)
    assert loaded.spec == trained_state.spec
    assert loaded.steps == 3
    assert loaded.mode is Mode.INFERENCE
    assert np.array_equal(loaded.color_w, trained_state.color_w)
    x = rng.standard_normal((4, 5))
    assert np.array_equal(forward_infer(loaded, x), forward_infer(trained_state, x))


def test_unfinalized_state_keeps_training_mode(trained_state):
    loaded = decode_layer_state(encode_layer_state(trained_state))
    assert loaded.mode is Mode.TRAINING
    assert loaded.finalized_w is None
    assert all(np.array_equal(a, b) for a, b in zip(loaded.running_stat, trained_state.running_stat))


def test_bad_magic(trained_state):
    payload = b"XXXX" + encode_layer_state(trained_state)[4:]
    with pytest.raises(ParseError, match="bad magic") as info:
        decode_layer_state(payload)
    assert info.value.offset == 0


def test_truncated_and_trailing_bytes(trained_state):
    payload = encode_layer_state(trained_state)
    with pytest.raises(ParseError, match="truncated"):
        decode_layer_state(payload[:-8])
    with pytest.raises(ParseError, match="trailing"):
        decode_layer_state(payload + b"\x00" * 8)
    with pytest.raises(ParseError, match="header"):
        decode_layer_state(payload[:10])


def test_sequence_file(tmp_path, rng):
    matrices = [rng.standard_normal((3, 3)) for _ in range(4)]
    path = save_sequence(tmp_path / "w.bws", "whitening", matrices)
    name, loaded = load_sequence(path)
    assert name == "whitening"
    assert len(loaded) == 4
    assert all(np.array_equal(a, b) for a, b in zip(loaded, matrices))


def test_empty_sequence(tmp_path):
    name, loaded = load_sequence(save_sequence(tmp_path / "empty.bws", "sigma", []))
    assert name == "sigma"
    assert loaded == []


def test_sequence_errors(tmp_path):
    with pytest.raises(ValidationError):
        save_sequence(tmp_path / "bad.bws", "flat", [1.0, 2.0])
    path = tmp_path / "junk.bws"
    path.write_bytes(b"NOPE\x00\x00\x00\x00")
    with pytest.raises(ParseError, match="bad magic"):
        load_sequence(path)


def test_sequence_rejects_bad_name_and_trailing_bytes(tmp_path, rng):
    path = save_sequence(tmp_path / "s.bws", "sigma", [rng.standard_normal((2, 2))])
    payload = path.read_bytes()
    start = payload.index(b"sigma")

    path.write_bytes(payload[:start] + b"\xffigma" + payload[start + 5:])
    with pytest.raises(ParseError, match="UTF-8") as info:
        load_sequence(path)
    assert info.value.offset == start

    path.write_bytes(payload + b"\x00" * 3)
    with pytest.raises(ParseError, match="3 trailing bytes"):
        load_sequence(path)
