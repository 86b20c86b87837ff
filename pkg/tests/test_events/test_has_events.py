from hdenseformer import Event
from hdenseformer.events import custom_event_handlers, event_handler, trigger_event


def test_handlers_run_in_registration_order():
    first = event_handler(Event.on_case_evaluated)(lambda case: f'first {case}')
    second = event_handler(Event.on_case_evaluated)(lambda case: f'second {case}')
    try:
        assert trigger_event(Event.on_case_evaluated, 'a') == ['first a', 'second a']
    finally:
        first.unregister()
        second.unregister()
    assert not custom_event_handlers[Event.on_case_evaluated]


def test_unregistered_handler_is_not_called():
    calls = []
    wrapper = event_handler(Event.on_early_stop)(lambda *args: calls.append(args))
    wrapper.unregister()
    trigger_event(Event.on_early_stop, 3, 1, 0.5)
    assert calls == []


def test_failing_handler_is_reported_not_raised(capsys):
    def broken(summary):
        raise RuntimeError('handler bug')

    wrapper = event_handler(Event.on_epoch_end)(broken)
    after = event_handler(Event.on_epoch_end)(lambda summary: 'ok')
    try:
        assert trigger_event(Event.on_epoch_end, None) == ['ok']
    finally:
        wrapper.unregister()
        after.unregister()
    assert 'handler bug' in capsys.readouterr().out


def test_wrapper_still_calls_the_function():
    wrapper = event_handler(Event.on_training_started)(lambda run, model: (run, model))
    try:
        assert wrapper(1, 2) == (1, 2)
    finally:
        wrapper.unregister()


def test_every_event_has_a_distinct_name():
    assert len({event.name for event in Event}) == len(Event)
