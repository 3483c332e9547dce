import { describe, expect, it } from "vitest";
import {
  MAX_CLIP_SECONDS,
  SAMPLE_RATE,
  WavFormatError,
  encodeWav,
  floatTo16,
  fromBase64,
  parseWav,
  resampleTo16k,
  silentClip,
  toBase64,
  validateClip,
} from "../src/wav.js";

describe("encodeWav / parseWav", () => {
  it("round-trips header fields for a one-second clip", () => {
    const clip = encodeWav(new Int16Array(SAMPLE_RATE));
    const info = parseWav(clip);
    expect(info.sampleRate).toBe(16000);
    expect(info.channels).toBe(1);
    expect(info.bitsPerSample).toBe(16);
    expect(info.frames).toBe(SAMPLE_RATE);
    expect(info.durationSeconds).toBeCloseTo(1.0, 6);
  });

  it("writes the canonical 44-byte header", () => {
    const clip = encodeWav(new Int16Array(10));
    expect(clip.length).toBe(44 + 20);
    expect(String.fromCharCode(...clip.subarray(0, 4))).toBe("RIFF");
    expect(String.fromCharCode(...clip.subarray(8, 12))).toBe("WAVE");
  });

  it("preserves sample bytes", () => {
    const samples = new Int16Array([0, 100, -100, 32767, -32768]);
    const parsedView = encodeWav(samples);
    const data = new Int16Array(parsedView.buffer, 44, samples.length);
    expect(Array.from(data)).toEqual(Array.from(samples));
  });

  it("rejects non-WAV bytes", () => {
    expect(() => parseWav(new Uint8Array(10))).toThrow(WavFormatError);
    const junk = new Uint8Array(64).fill(65);
    expect(() => parseWav(junk)).toThrow(/RIFF/);
  });

  it("rejects a truncated fmt chunk and missing data chunk", () => {
    const clip = encodeWav(new Int16Array(4));
    const noData = clip.subarray(0, 40);
    expect(() => parseWav(noData)).toThrow(WavFormatError);
  });

  it("rejects compressed (non-PCM) audio", () => {
    const clip = encodeWav(new Int16Array(4));
    const view = new DataView(clip.buffer);
    view.setUint16(20, 3, true); // IEEE float format tag
    expect(() => parseWav(clip)).toThrow(/not PCM/);
  });
});

describe("validateClip", () => {
  it("accepts the manual-control silent clip", () => {
    const info = validateClip(silentClip());
    expect(info.durationSeconds).toBeCloseTo(0.6, 3);
  });

  it("rejects stereo", () => {
    const clip = encodeWav(new Int16Array(8));
    new DataView(clip.buffer).setUint16(22, 2, true);
    expect(() => validateClip(clip)).toThrow(/mono/);
  });

  it("rejects the wrong sample rate", () => {
    const clip = encodeWav(new Int16Array(8));
    new DataView(clip.buffer).setUint32(24, 44100, true);
    expect(() => validateClip(clip)).toThrow(/16000/);
  });

  it("rejects clips over the length limit", () => {
    const frames = SAMPLE_RATE * MAX_CLIP_SECONDS + SAMPLE_RATE;
    expect(() => validateClip(encodeWav(new Int16Array(frames)))).toThrow(/limit/);
  });

  it("accepts a clip exactly at the limit", () => {
    const info = validateClip(encodeWav(new Int16Array(SAMPLE_RATE * MAX_CLIP_SECONDS)));
    expect(info.durationSeconds).toBe(MAX_CLIP_SECONDS);
  });
});

describe("sample conversion", () => {
  it("clamps floats outside ±1", () => {
    const out = floatTo16(new Float32Array([0, 0.5, 1.5, -2]));
    expect(out[0]).toBe(0);
    expect(out[1]).toBe(Math.round(0.5 * 32767));
    expect(out[2]).toBe(32767);
    expect(out[3]).toBe(-32767);
  });

  it("resamples 48 kHz down to 16 kHz", () => {
    const src = new Float32Array(4800).fill(0.25);
    const out = resampleTo16k(src, 48000);
    expect(out.length).toBe(1600);
    expect(out[800]).toBeCloseTo(0.25, 6);
  });

  it("passes 16 kHz input through untouched", () => {
    const src = new Float32Array([0.1, 0.2]);
    expect(resampleTo16k(src, SAMPLE_RATE)).toBe(src);
  });
});

describe("base64 transport", () => {
  it("round-trips arbitrary bytes", () => {
    const bytes = new Uint8Array(300);
    for (let i = 0; i < bytes.length; i++) bytes[i] = (i * 7) % 256;
    expect(Array.from(fromBase64(toBase64(bytes)))).toEqual(Array.from(bytes));
  });

  it("round-trips a whole clip", () => {
    const clip = silentClip(100);
    const back = fromBase64(toBase64(clip));
    expect(back.length).toBe(clip.length);
    expect(validateClip(back).frames).toBe(1600);
  });
});
