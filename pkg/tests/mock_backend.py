"""Scripted chat-completions mock server for client tests.

The script is an ordered list of responses, one consumed per request:

* ``(status, text)``: chat-completions body with ``text`` as the message
  content (empty string means a blank completion);
* ``(status, None)``: error status with a plain JSON error body;
* ``("raw", body)``: HTTP 200 with a verbatim (possibly malformed) body.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer


class MockBackendServer:
    def __init__(self, script: list[tuple]):
        self.script = list(script)
        self.requests: list[dict] = []
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self) -> None:  # noqa: N802 (http.server API)
                length = int(self.headers.get("Content-Length", 0))
                outer.requests.append(json.loads(self.rfile.read(length) or b"{}"))
                if not outer.script:
                    status, body = 500, json.dumps({"error": "script exhausted"})
                else:
                    entry = outer.script.pop(0)
                    if entry[0] == "raw":
                        status, body = 200, entry[1]
                    else:
                        status, text = entry
                        if status == 200:
                            body = json.dumps({"choices": [{"message": {"content": text}}]})
                        else:
                            body = json.dumps({"error": {"code": status}})
                payload = body.encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args) -> None:  # keep test output quiet
                pass

        self.server = HTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def endpoint(self) -> str:
        host, port = self.server.server_address
        return f"http://{host}:{port}/v1/chat/completions"

    def __enter__(self) -> "MockBackendServer":
        self.thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self.server.shutdown()
        self.server.server_close()
