from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from scaleplan.bench.bridge import data_text, household_domain
from scaleplan.pddl.parser import parse_domain, parse_problem

from oracles import KITCHEN

KITCHEN_PROBLEM = """
(define (problem slice-tomato)
  (:domain kitchen)
  (:objects r1 - robot knife1 - knife tomato - food plate1 - plate)
  (:init (reachable knife1))
  (:goal (and (placed tomato plate1))))
"""


@pytest.fixture(scope="session")
def pick_domain_text():
    return data_text("simple-pick-place.pddl")


@pytest.fixture(scope="session")
def pick_problem_text():
    return data_text("simple-task.pddl")


@pytest.fixture(scope="session")
def pick_domain(pick_domain_text):
    return parse_domain(pick_domain_text)


@pytest.fixture(scope="session")
def pick_problem(pick_domain, pick_problem_text):
    return parse_problem(pick_problem_text, pick_domain)


@pytest.fixture(scope="session")
def kitchen():
    return parse_domain(KITCHEN)


@pytest.fixture(scope="session")
def kitchen_problem(kitchen):
    return parse_problem(KITCHEN_PROBLEM, kitchen)


@pytest.fixture(scope="session")
def household():
    return household_domain()


class ChatStub:
    """Scripted OpenAI-style endpoint: each POST pops the next reply.

    A reply is either a string (sent as the assistant message content) or an
    int (sent as a bare HTTP error status).
    """

    def __init__(self, replies=()):
        self.replies = list(replies)
        self.requests: list[dict] = []
        self.headers: list[dict] = []
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length) or b"{}")
                stub.requests.append({"path": self.path, "body": body})
                stub.headers.append(dict(self.headers))
                reply = stub.replies.pop(0) if stub.replies else "{}"
                if isinstance(reply, int):
                    self.send_response(reply)
                    self.end_headers()
                    return
                payload = json.dumps({"choices": [{"message": {"role": "assistant", "content": reply}}]})
                data = payload.encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}/v1"

    def script(self, *replies):
        self.replies = list(replies)
        self.requests.clear()
        self.headers.clear()

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture(scope="session")
def _chat_server():
    with ChatStub() as stub:
        yield stub


@pytest.fixture
def chat_stub(_chat_server):
    _chat_server.script()
    return _chat_server


def seeds_reply(*seeds) -> str:
    return json.dumps({"seeds": [{"action": a, "args": list(args)} for a, *args in seeds]})
