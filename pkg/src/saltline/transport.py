"""Two-party session plumbing over a reliable byte stream.

A frame is frame_len(4 BE) followed by the envelope serialization; the frame
schema has no field that the baseline messenger format lacks. Every octet
sent or received through a Session lands in its transcript, which can be
replayed byte-identically. Deliberate reordering for tests happens above the
stream via ReorderBuffer, so delivery order is seedable and deterministic.
"""

from __future__ import annotations

import socket
import struct
import threading
from dataclasses import dataclass

from .channel import PublicEnvelope
from .crypto import FramingError, prng_fill


class TransportError(Exception):
    pass


@dataclass(frozen=True)
class TranscriptEntry:
    direction: str  # "out" | "in"
    frame: bytes  # envelope serialization, without the length prefix


class MessageTranscript:
    """Append-only record of every frame observed on the wire."""

    def __init__(self) -> None:
        self._entries: list[TranscriptEntry] = []
        self._lock = threading.Lock()

    def append(self, direction: str, frame: bytes) -> None:
        with self._lock:
            self._entries.append(TranscriptEntry(direction, frame))

    @property
    def entries(self) -> list[TranscriptEntry]:
        with self._lock:
            return list(self._entries)

    def frames(self, direction: str | None = None) -> list[bytes]:
        return [
            e.frame for e in self.entries if direction is None or e.direction == direction
        ]

    def replay(self) -> list[PublicEnvelope]:
        return [PublicEnvelope.from_bytes(e.frame) for e in self.entries]


class Session:
    """One endpoint of an established duplex connection."""

    def __init__(self, sock: socket.socket, session_id: bytes) -> None:
        self._sock = sock
        self.session_id = session_id
        self.transcript = MessageTranscript()
        self._send_lock = threading.Lock()
        self._recv_lock = threading.Lock()

    def send(self, env: PublicEnvelope) -> None:
        frame = env.to_bytes()
        with self._send_lock:
            try:
                self._sock.sendall(struct.pack(">I", len(frame)) + frame)
            except OSError as exc:
                raise TransportError(str(exc)) from exc
            self.transcript.append("out", frame)

    def recv(self) -> PublicEnvelope | None:
        """Next envelope, or None at end of stream."""
        with self._recv_lock:
            header = self._read_exact(4, allow_eof=True)
            if header is None:
                return None
            (length,) = struct.unpack(">I", header)
            frame = self._read_exact(length, allow_eof=False)
            self.transcript.append("in", frame)
        return PublicEnvelope.from_bytes(frame)

    def _read_exact(self, n: int, allow_eof: bool) -> bytes | None:
        buf = b""
        while len(buf) < n:
            try:
                chunk = self._sock.recv(n - len(buf))
            except OSError as exc:
                raise TransportError(str(exc)) from exc
            if not chunk:
                if allow_eof and not buf:
                    return None
                raise FramingError("truncated frame")
            buf += chunk
        return buf

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


def connect(host: str, port: int, rng=None, timeout: float = 10.0) -> Session:
    """Dial a peer; proposes a fresh 8-octet session id in the clear."""
    sock = socket.create_connection((host, port), timeout=timeout)
    sock.settimeout(None)
    session_id = prng_fill(8, rng)
    sock.sendall(session_id)
    return Session(sock, session_id)


class Listener:
    def __init__(self, host: str, port: int) -> None:
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen(1)

    @property
    def port(self) -> int:
        return self._sock.getsockname()[1]

    def accept(self) -> Session:
        conn, _ = self._sock.accept()
        session_id = b""
        while len(session_id) < 8:
            chunk = conn.recv(8 - len(session_id))
            if not chunk:
                raise TransportError("peer closed during session hello")
            session_id += chunk
        return Session(conn, session_id)

    def close(self) -> None:
        self._sock.close()


def memory_pair(session_id: bytes | None = None, rng=None) -> tuple[Session, Session]:
    """In-memory duplex pipe: two connected Sessions in one process."""
    a, b = socket.socketpair()
    sid = session_id or prng_fill(8, rng)
    return Session(a, sid), Session(b, sid)


class ReorderBuffer:
    """Test hook: permute delivery order within a fixed-size window.

    Envelopes are buffered and flushed in a seeded random permutation once
    the window fills; sequence numbers inside the payload are untouched, so
    the receiver exercises its reorder-by-seq path.
    """

    def __init__(self, session: Session, window: int, rng) -> None:
        if window < 1:
            raise ValueError("window must be >= 1")
        self._session = session
        self._window = window
        self._rng = rng
        self._held: list[PublicEnvelope] = []

    def send(self, env: PublicEnvelope) -> None:
        self._held.append(env)
        if len(self._held) >= self._window:
            self.flush()

    def flush(self) -> None:
        order = list(range(len(self._held)))
        self._rng.shuffle(order)
        for i in order:
            self._session.send(self._held[i])
        self._held.clear()
