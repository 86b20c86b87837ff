import traceback
from collections import defaultdict
from typing import DefaultDict, Callable, List

from .enums import Event

__all__ = ('trigger_event', 'event_handler', 'EventWrapper', 'custom_event_handlers')

custom_event_handlers: DefaultDict[Event, List[Callable]] = defaultdict(list)


def trigger_event(event: Event, *args) -> list:
    """
    calls every handler registered for `event`, a failing handler is reported and skipped
    :return: the handlers' return values, in registration order
    """
    out = []
    for handler in custom_event_handlers[event]:
        try:
            out.append(handler(*args))
        except Exception as e:
            print(f'\nerror has occurred while triggering an event handler, details:\n'
                  f'event: {event}\n'
                  f'error: {type(e)}\n'
                  f'reason: {e}\n'
                  f'stack trace:')
            traceback.print_exc()
    return out


def event_handler(event: Event):
    def _register(func):
        custom_event_handlers[event].append(func)
        return EventWrapper(func, type=event)

    return _register


class EventWrapper:
    def __init__(self, func, type: Event):
        self.func = func
        self.type = type

    def unregister(self):
        events = custom_event_handlers[self.type]
        if self.func in events:
            events.remove(self.func)

    def __call__(self, *args, **kwargs):
        return self.func(*args, **kwargs)
