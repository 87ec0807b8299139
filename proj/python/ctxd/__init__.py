"""Python access to the ctxd engine.

The service speaks the same JSON API as the HTTP server; responses are
decoded here for convenience.
"""

import json

from ._ctxd import Error, MockService as _MockService, parse_structure_decision as _parse, replay as _replay

__all__ = ["Error", "Service", "parse_structure_decision", "replay"]


class Service:
    def __init__(self, store, mock=None, user_model_enabled=False):
        mock_json = "" if mock is None else json.dumps(mock)
        self._svc = _MockService(str(store), mock_json, user_model_enabled)

    def call(self, method, path, body=None):
        raw = "" if body is None else (body if isinstance(body, str) else json.dumps(body))
        status, text, ctype = self._svc.handle(method, path, raw)
        if ctype == "application/json":
            return status, json.loads(text)
        return status, text

    def calls(self, role):
        return self._svc.calls(role)


def parse_structure_decision(raw):
    return json.loads(_parse(raw))


def replay(script, store):
    complete, snapshot = _replay(str(script), str(store))
    return complete, json.loads(snapshot)
