import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Callable, Dict, Iterable, List, Optional, Union

Responder = Callable[[Dict[str, Any]], str]


class MockLMServer:
    """
    A local HTTP server speaking the remote backend's wire protocol, replaying canned transcripts.

    ``replies`` maps a role (``"meta"``/``"assistant"``) to either a list of texts, returned in order and
    repeating the last one, or a callable receiving the request body. The first ``fail_first`` requests are
    answered with ``fail_status``. Every request body is recorded in ``requests``.

    Example::

        with MockLMServer({'meta': ["Always prioritize the well-being of others over your own."]}) as server:
            backend = pn.lm.RemoteBackend(server.url)
    """
    def __init__(self,
                 replies: Optional[Dict[str, Union[Iterable[str], Responder]]] = None,
                 *,
                 fail_first: int = 0,
                 fail_status: int = 503,
                 require_key: Optional[str] = None,
                 auth_header: str = 'Authorization'):
        self.replies: Dict[str, Union[List[str], Responder]] = {}
        for role, reply in (replies or {}).items():
            self.replies[role] = reply if callable(reply) else list(reply)
        self.fail_first = fail_first
        self.fail_status = fail_status
        self.require_key = require_key
        self.auth_header = auth_header
        self.requests: List[Dict[str, Any]] = []
        self._counts: Dict[str, int] = {}
        self._lock = threading.Lock()
        self._server: Optional[ThreadingHTTPServer] = None
        self._thread: Optional[threading.Thread] = None

    def _reply(self, body: Dict[str, Any]) -> Optional[str]:
        role = body.get('role')
        reply = self.replies.get(role) # type: ignore[arg-type]
        if reply is None:
            return None
        if callable(reply):
            return reply(body)
        n = self._counts.get(role, 0) # type: ignore[arg-type]
        self._counts[role] = n + 1 # type: ignore[index]
        return reply[min(n, len(reply) - 1)]

    def _handler(self):
        mock = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get('Content-Length', 0))
                try:
                    body = json.loads(self.rfile.read(length) or b'{}')
                except ValueError:
                    return self._send(400, {'error': 'body is not JSON'})
                with mock._lock:
                    mock.requests.append(body)
                    if len(mock.requests) <= mock.fail_first:
                        return self._send(mock.fail_status, {'error': 'unavailable'})
                    if mock.require_key is not None and self.headers.get(mock.auth_header) != mock.require_key:
                        return self._send(401, {'error': 'unauthorized'})
                    text = mock._reply(body)
                if text is None:
                    return self._send(404, {'error': f"no transcript for role {body.get('role')!r}"})
                self._send(200, {
                    'text': text,
                    'prompt_tokens': len(str(body.get('prompt', '')).split()),
                    'completion_tokens': len(text.split()),
                })

            def _send(self, status: int, payload: Dict[str, Any]):
                data = json.dumps(payload).encode('utf8')
                self.send_response(status)
                self.send_header('Content-Type', 'application/json')
                self.send_header('Content-Length', str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, format, *args):
                pass # keep test output clean

        return Handler

    def start(self) -> 'MockLMServer':
        self._server = ThreadingHTTPServer(('127.0.0.1', 0), self._handler())
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    @property
    def url(self) -> str:
        assert self._server is not None, "server not started"
        host, port = self._server.server_address[:2]
        return f'http://{host}:{port}/v1/generate'

    def __enter__(self):
        return self.start()

    def __exit__(self, *args):
        self.stop()
