"""Regenerates the synthetic fixture clips in audio/ (deterministic)."""

import math
import random
import struct
import wave
from pathlib import Path

HERE = Path(__file__).parent / "audio"


def write_pcm16(path, frames, rate):
    channels = len(frames[0])
    with wave.open(str(path), "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(b"".join(struct.pack("<" + "h" * channels, *(round(s * 32767) for s in f)) for f in frames))


def write_float32(path, samples, rate):
    data = b"".join(struct.pack("<f", s) for s in samples)
    header = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, 3, 1, rate, rate * 4, 4, 32)
    header += b"data" + struct.pack("<I", len(data))
    path.write_bytes(header + data)


def phone(rate=48000, seconds=2.0):
    # 180 Hz buzz gated in 0.4 s bursts
    out = []
    for n in range(int(rate * seconds)):
        t = n / rate
        gate = 1.0 if (t % 0.5) < 0.4 else 0.0
        out.append((0.6 * math.sin(2 * math.pi * 180 * t) + 0.2 * math.sin(2 * math.pi * 360 * t)) * gate)
    return out


def speaker(rate=44100, seconds=3.0):
    # stereo kick-drum thumps at 120 bpm with a bass line
    frames = []
    for n in range(int(rate * seconds)):
        t = n / rate
        beat = t % 0.5
        kick = math.exp(-beat * 18) * math.sin(2 * math.pi * (60 + 90 * math.exp(-beat * 30)) * beat)
        bass = 0.3 * math.sin(2 * math.pi * (110 if int(t * 2) % 2 else 82.5) * t)
        frames.append((0.7 * kick + bass, 0.6 * kick + 0.9 * bass))
    peak = max(max(abs(a), abs(b)) for a, b in frames)
    return [(a / peak * 0.9, b / peak * 0.9) for a, b in frames]


def washer(rate=48000, seconds=2.5):
    rng = random.Random(7)
    out, lp = [], 0.0
    for n in range(int(rate * seconds)):
        t = n / rate
        lp += 0.02 * (rng.uniform(-1, 1) - lp)
        drum = math.sin(2 * math.pi * 14 * t)
        out.append(0.5 * math.sin(2 * math.pi * 95 * t) * (0.7 + 0.3 * drum) + 2.0 * lp)
    return out


def hum(rate=48000, seconds=1.0):
    return [0.5 * math.sin(2 * math.pi * 120 * n / rate) for n in range(int(rate * seconds))]


if __name__ == "__main__":
    HERE.mkdir(exist_ok=True)
    write_pcm16(HERE / "phone.wav", [(s,) for s in phone()], 48000)
    write_pcm16(HERE / "speaker.wav", speaker(), 44100)
    write_float32(HERE / "washer.wav", washer(), 48000)
    write_float32(HERE / "hum.wav", hum(), 48000)
