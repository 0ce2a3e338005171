#!/usr/bin/env python3
"""Writes the golden WAV fixtures byte by byte with struct."""
import struct
from pathlib import Path

HERE = Path(__file__).resolve().parent
PCM_GUID = bytes.fromhex("0100000000001000800000aa00389b71")


def chunk(tag, payload):
    pad = b"\0" if len(payload) % 2 else b""
    return tag + struct.pack("<I", len(payload)) + payload + pad


def riff(*chunks):
    body = b"WAVE" + b"".join(chunks)
    return b"RIFF" + struct.pack("<I", len(body)) + body


def fmt(tag, channels, rate, bits, extra=b""):
    block = channels * bits // 8
    payload = struct.pack("<HHIIHH", tag, channels, rate, rate * block, block, bits) + extra
    return chunk(b"fmt ", payload)


def write(name, data):
    (HERE / name).write_bytes(data)


mono16 = [0, 1, -1, 12, -12, 32767, -32768, 1000, -1000, 5]
write("pcm16_mono.wav", riff(
    fmt(1, 1, 8000, 16),
    chunk(b"LIST", b"INFOabc"),  # odd length: exercises the pad byte
    chunk(b"data", struct.pack("<%dh" % len(mono16), *mono16)),
))

write("pcm8_mono.wav", riff(
    fmt(1, 1, 11025, 8),
    chunk(b"data", bytes([128, 129, 127, 255, 0, 140])),
))

left = [100, -100, 7, -8]
right = [300, 102, -9, -8]
frames = [v for pair in zip(left, right) for v in pair]
write("pcm16_stereo.wav", riff(
    fmt(1, 2, 16000, 16),
    chunk(b"data", struct.pack("<%dh" % len(frames), *frames)),
))

ext = struct.pack("<HHI", 22, 16, 4) + PCM_GUID
write("pcm16_extensible.wav", riff(
    fmt(0xFFFE, 1, 8000, 16, ext),
    chunk(b"data", struct.pack("<4h", 3, -3, 300, -300)),
))

write("float32.wav", riff(
    fmt(3, 1, 8000, 32),
    chunk(b"data", struct.pack("<2f", 0.5, -0.5)),
))

write("truncated.wav", riff(fmt(1, 1, 8000, 16))[:30])
