import pytest
from hypothesis import given, strategies as st

from radioleader.channel import (
    COLLISION,
    IDLE,
    LISTEN,
    NO_FEEDBACK,
    SILENCE,
    CdModel,
    received,
    resolve_slot,
    transmit,
)

S, X, R, N = CdModel.STRONG_CD, CdModel.SENDER_CD, CdModel.RECEIVER_CD, CdModel.NO_CD


def test_lone_listener_hears_silence():
    out = resolve_slot(S, {7: LISTEN})
    assert out.feedback[7] == SILENCE
    assert out.transmitter_count == 0
    assert out.delivered is None


def test_sender_cd_collision_is_silence_everywhere():
    out = resolve_slot(X, {1: transmit(10), 2: transmit(20), 3: LISTEN})
    assert out.feedback == {1: SILENCE, 2: SILENCE, 3: SILENCE}
    assert out.delivered is None


def test_no_cd_unique_delivery():
    out = resolve_slot(N, {1: transmit(42), 2: LISTEN})
    assert out.feedback[1] == NO_FEEDBACK
    assert out.feedback[2] == received(42)
    assert out.delivered == 42


def test_strong_cd_transmitters_detect_collision():
    out = resolve_slot(S, {1: transmit(1), 2: transmit(2)})
    assert out.feedback[1] == COLLISION
    assert out.feedback[2] == COLLISION


def test_idle_devices_learn_nothing():
    for model in CdModel:
        out = resolve_slot(model, {1: IDLE, 2: transmit(5), 3: LISTEN})
        assert out.feedback[1] == NO_FEEDBACK


@pytest.mark.parametrize("c", [0, 1, 2, 3])
def test_delivered_iff_exactly_one_transmitter(c):
    actions = {i: transmit(100 + i) for i in range(1, c + 1)}
    actions[90] = LISTEN
    for model in CdModel:
        out = resolve_slot(model, actions)
        assert out.transmitter_count == c
        if c == 1:
            assert out.delivered == 101
        else:
            assert out.delivered is None


def _coarsen(model, role, strong_fb):
    # What a weaker model's device must see, as a function of its strong_cd
    # feedback.  Listeners lose collision detection without receiver-side
    # feedback; transmitters lose everything without sender-side feedback,
    # and under sender_cd they see silence instead of collision.
    if role == "idle":
        return NO_FEEDBACK
    if role == "listen":
        if strong_fb == COLLISION and not model.receiver_side:
            return SILENCE
        return strong_fb
    if not model.sender_side:
        return NO_FEEDBACK
    if strong_fb == COLLISION and model is CdModel.SENDER_CD:
        return SILENCE
    return strong_fb


@pytest.mark.parametrize("c", [0, 1, 2, 3])
@pytest.mark.parametrize("model", [X, R, N])
def test_weaker_feedback_is_coarsened_strong_feedback(model, c):
    actions = {i: transmit(i) for i in range(1, c + 1)}
    actions[50] = LISTEN
    actions[60] = IDLE
    strong = resolve_slot(S, actions)
    weak = resolve_slot(model, actions)
    for dev, act in actions.items():
        role = act.kind if act.kind != "transmit" else "transmit"
        assert weak.feedback[dev] == _coarsen(model, role, strong.feedback[dev]), (
            model,
            dev,
            c,
        )


def test_collision_never_reported_in_two_way_models():
    for c in (2, 3, 5):
        actions = {i: transmit(i) for i in range(1, c + 1)}
        actions[99] = LISTEN
        for model in (X, N):
            out = resolve_slot(model, actions)
            assert COLLISION not in out.feedback.values()


def test_model_partial_order():
    assert S.is_strictly_stronger(X)
    assert S.is_strictly_stronger(R)
    assert S.is_strictly_stronger(N)
    assert X.is_strictly_stronger(N)
    assert R.is_strictly_stronger(N)
    assert not X.is_strictly_stronger(R)
    assert not R.is_strictly_stronger(X)
    for m in CdModel:
        assert not m.is_strictly_stronger(m)


def test_parse_aliases():
    assert CdModel.parse("strong") is S
    assert CdModel.parse("Sender-CD") is X
    assert CdModel.parse("receiver_cd") is R
    assert CdModel.parse("nocd") is N
    assert CdModel.parse("none") is N
    with pytest.raises(ValueError):
        CdModel.parse("half_duplex")


_action = st.sampled_from(["idle", "listen", "transmit"])


@given(
    kinds=st.dictionaries(st.integers(1, 30), _action, min_size=1, max_size=12),
    model=st.sampled_from(list(CdModel)),
)
def test_resolve_slot_total_and_deterministic(kinds, model):
    actions = {
        d: transmit(d) if k == "transmit" else (LISTEN if k == "listen" else IDLE)
        for d, k in kinds.items()
    }
    a = resolve_slot(model, actions)
    b = resolve_slot(model, actions)
    assert a == b
    assert set(a.feedback) == set(actions)
    # all listeners see the same thing
    listener_fb = {a.feedback[d] for d, act in actions.items() if act.kind == "listen"}
    assert len(listener_fb) <= 1
    assert (a.delivered is not None) == (a.transmitter_count == 1)
