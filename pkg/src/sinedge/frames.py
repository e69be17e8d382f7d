"""Binary frame protocol between gateways and the edge node.

Wire format: a 4-byte big-endian length prefix, then the payload.  The
payload starts with one type byte followed by fixed-width fields:

    0x01 sample   mote:u16  greenhouse:8s  moisture:f64  sampled_at:f64
    0x02 command  target:u16  greenhouse:8s  action:u8  origin:u8  issued_at:f64

Greenhouse ids are ASCII, NUL-padded to 8 bytes.  The simulator bypasses
this layer entirely (it calls the edge hooks directly); service deployments
speak it over a TCP stream socket, gateways upstream samples and the edge
pushes valve commands back down the same connections.
"""

from __future__ import annotations

import socket
import struct
import threading
from typing import Any, Callable, Optional, Union

from .domain import (
    CommandOrigin,
    MoistureSample,
    ValveAction,
    ValveCommand,
)

FRAME_SAMPLE = 0x01
FRAME_COMMAND = 0x02

_LEN = struct.Struct(">I")
_SAMPLE = struct.Struct(">H8sdd")
_COMMAND = struct.Struct(">H8sBBd")

_ACTION_CODE = {ValveAction.CLOSE: 0, ValveAction.OPEN: 1}
_ACTION_FROM = {v: k for k, v in _ACTION_CODE.items()}
_ORIGIN_CODE = {CommandOrigin.AUTO_CONTROLLER: 0, CommandOrigin.MANUAL_OPERATOR: 1}
_ORIGIN_FROM = {v: k for k, v in _ORIGIN_CODE.items()}

MAX_FRAME = 1024


class FrameError(ValueError):
    pass


def _pack_gid(greenhouse: str) -> bytes:
    try:
        raw = greenhouse.encode("ascii")
    except UnicodeEncodeError:
        raise FrameError(f"greenhouse id must be ASCII, got {greenhouse!r}") from None
    if not 1 <= len(raw) <= 8:
        raise FrameError(f"greenhouse id must be 1..8 ASCII bytes, got {greenhouse!r}")
    return raw.ljust(8, b"\x00")


def _unpack_gid(raw: bytes) -> str:
    return raw.rstrip(b"\x00").decode("ascii")


def encode_sample(sample: MoistureSample) -> bytes:
    body = bytes([FRAME_SAMPLE]) + _SAMPLE.pack(
        sample.mote, _pack_gid(sample.greenhouse), sample.moisture, sample.sampled_at
    )
    return _LEN.pack(len(body)) + body


def encode_command(command: ValveCommand) -> bytes:
    body = bytes([FRAME_COMMAND]) + _COMMAND.pack(
        command.target, _pack_gid(command.greenhouse),
        _ACTION_CODE[command.action], _ORIGIN_CODE[command.origin],
        command.issued_at,
    )
    return _LEN.pack(len(body)) + body


def decode_payload(body: bytes) -> Union[MoistureSample, ValveCommand]:
    if not body:
        raise FrameError("empty frame payload")
    kind = body[0]
    rest = body[1:]
    if kind == FRAME_SAMPLE:
        if len(rest) != _SAMPLE.size:
            raise FrameError(f"sample frame must be {_SAMPLE.size} body bytes, got {len(rest)}")
        mote, gid, moisture, sampled_at = _SAMPLE.unpack(rest)
        return MoistureSample(mote=mote, greenhouse=_unpack_gid(gid),
                              moisture=moisture, sampled_at=sampled_at)
    if kind == FRAME_COMMAND:
        if len(rest) != _COMMAND.size:
            raise FrameError(f"command frame must be {_COMMAND.size} body bytes, got {len(rest)}")
        target, gid, action, origin, issued_at = _COMMAND.unpack(rest)
        if action not in _ACTION_FROM or origin not in _ORIGIN_FROM:
            raise FrameError("command frame carries unknown action/origin code")
        return ValveCommand(target=target, greenhouse=_unpack_gid(gid),
                            action=_ACTION_FROM[action], issued_at=issued_at,
                            origin=_ORIGIN_FROM[origin])
    raise FrameError(f"unknown frame type 0x{kind:02x}")


class FrameReader:
    """Incremental decoder: feed() raw bytes, collect complete payloads."""

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[Union[MoistureSample, ValveCommand]]:
        self._buf.extend(data)
        out = []
        while True:
            if len(self._buf) < _LEN.size:
                return out
            (length,) = _LEN.unpack(bytes(self._buf[:_LEN.size]))
            if length > MAX_FRAME:
                raise FrameError(f"frame length {length} exceeds the {MAX_FRAME} byte cap")
            if len(self._buf) < _LEN.size + length:
                return out
            body = bytes(self._buf[_LEN.size:_LEN.size + length])
            del self._buf[:_LEN.size + length]
            out.append(decode_payload(body))


class GatewayFrameServer:
    """Accepts gateway stream connections; samples in, commands out.

    Decoded samples are pushed into the edge node with the supplied clock's
    current time; `broadcast_command` fans a command frame out to every
    connected gateway and is meant to be wired as the edge's dispatch.
    """

    def __init__(self, edge: Any, clock: Callable[[], float],
                 host: str = "127.0.0.1", port: int = 0):
        self._edge = edge
        self._clock = clock
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(8)
        self.address = self._listener.getsockname()
        self._conns: list[socket.socket] = []
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)

    def start(self) -> None:
        self._accept_thread.start()

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, _addr = self._listener.accept()
            except OSError:
                return
            with self._lock:
                self._conns.append(conn)
            threading.Thread(target=self._serve_conn, args=(conn,), daemon=True).start()

    def _serve_conn(self, conn: socket.socket) -> None:
        reader = FrameReader()
        try:
            while not self._stop.is_set():
                data = conn.recv(4096)
                if not data:
                    break
                for item in reader.feed(data):
                    if isinstance(item, MoistureSample):
                        self._edge.ingest(item, now=self._clock())
                    # Command frames from a gateway are not part of the
                    # protocol; drop them on the floor.
        except (OSError, FrameError):
            pass
        finally:
            with self._lock:
                if conn in self._conns:
                    self._conns.remove(conn)
            try:
                conn.close()
            except OSError:
                pass

    def broadcast_command(self, command: ValveCommand) -> None:
        frame = encode_command(command)
        with self._lock:
            conns = list(self._conns)
        for conn in conns:
            try:
                conn.sendall(frame)
            except OSError:
                with self._lock:
                    if conn in self._conns:
                        self._conns.remove(conn)

    def stop(self) -> None:
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass
        with self._lock:
            conns = list(self._conns)
            self._conns.clear()
        for conn in conns:
            try:
                conn.close()
            except OSError:
                pass
