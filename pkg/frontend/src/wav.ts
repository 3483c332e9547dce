/**
 * WAV encoding and contract checks.
 *
 * The recognizer accepts exactly one format: RIFF/WAVE, PCM, mono,
 * 16 kHz, 16-bit little-endian, and clips we upload keep to 5 seconds
 * or less. Everything recorded in the browser is converted to that
 * shape before it goes on the wire.
 */

export const SAMPLE_RATE = 16000;
export const MAX_CLIP_SECONDS = 5;

export class WavFormatError extends Error {}

export interface WavInfo {
  sampleRate: number;
  channels: number;
  bitsPerSample: number;
  frames: number;
  durationSeconds: number;
}

function writeAscii(view: DataView, offset: number, text: string): void {
  for (let i = 0; i < text.length; i++) {
    view.setUint8(offset + i, text.charCodeAt(i));
  }
}

function readAscii(view: DataView, offset: number, length: number): string {
  let out = "";
  for (let i = 0; i < length; i++) {
    out += String.fromCharCode(view.getUint8(offset + i));
  }
  return out;
}

/** Clamp floats in [-1, 1] and scale to int16. */
export function floatTo16(samples: Float32Array): Int16Array {
  const out = new Int16Array(samples.length);
  for (let i = 0; i < samples.length; i++) {
    const v = Math.max(-1, Math.min(1, samples[i]));
    out[i] = Math.round(v * 32767);
  }
  return out;
}

/** Linear-interpolation resample to the recognizer's 16 kHz. */
export function resampleTo16k(samples: Float32Array, sourceRate: number): Float32Array {
  if (sourceRate <= 0) throw new WavFormatError(`bad source rate ${sourceRate}`);
  if (sourceRate === SAMPLE_RATE) return samples;
  const ratio = sourceRate / SAMPLE_RATE;
  const frames = Math.max(1, Math.floor(samples.length / ratio));
  const out = new Float32Array(frames);
  for (let i = 0; i < frames; i++) {
    const pos = i * ratio;
    const lo = Math.floor(pos);
    const hi = Math.min(lo + 1, samples.length - 1);
    const frac = pos - lo;
    out[i] = samples[lo] * (1 - frac) + samples[hi] * frac;
  }
  return out;
}

/** Canonical 44-byte-header mono PCM16 WAV at 16 kHz. */
export function encodeWav(samples: Int16Array): Uint8Array {
  const dataLen = samples.length * 2;
  const buf = new ArrayBuffer(44 + dataLen);
  const view = new DataView(buf);
  writeAscii(view, 0, "RIFF");
  view.setUint32(4, 36 + dataLen, true);
  writeAscii(view, 8, "WAVE");
  writeAscii(view, 12, "fmt ");
  view.setUint32(16, 16, true);
  view.setUint16(20, 1, true); // PCM
  view.setUint16(22, 1, true); // mono
  view.setUint32(24, SAMPLE_RATE, true);
  view.setUint32(28, SAMPLE_RATE * 2, true);
  view.setUint16(32, 2, true);
  view.setUint16(34, 16, true);
  writeAscii(view, 36, "data");
  view.setUint32(40, dataLen, true);
  for (let i = 0; i < samples.length; i++) {
    view.setInt16(44 + i * 2, samples[i], true);
  }
  return new Uint8Array(buf);
}

/** Parse a WAV header, walking chunks; throws WavFormatError when malformed. */
export function parseWav(bytes: Uint8Array): WavInfo {
  if (bytes.length < 44) throw new WavFormatError("too short to be a WAV file");
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  if (readAscii(view, 0, 4) !== "RIFF") throw new WavFormatError("missing RIFF id");
  if (readAscii(view, 8, 4) !== "WAVE") throw new WavFormatError("missing WAVE id");

  let offset = 12;
  let fmt: { sampleRate: number; channels: number; bits: number; format: number } | null = null;
  let dataLen: number | null = null;
  while (offset + 8 <= bytes.length) {
    const chunkId = readAscii(view, offset, 4);
    const chunkLen = view.getUint32(offset + 4, true);
    if (chunkId === "fmt ") {
      if (chunkLen < 16) throw new WavFormatError("fmt chunk too short");
      fmt = {
        format: view.getUint16(offset + 8, true),
        channels: view.getUint16(offset + 10, true),
        sampleRate: view.getUint32(offset + 12, true),
        bits: view.getUint16(offset + 22, true),
      };
    } else if (chunkId === "data") {
      dataLen = Math.min(chunkLen, bytes.length - offset - 8);
    }
    offset += 8 + chunkLen + (chunkLen % 2);
  }
  if (!fmt) throw new WavFormatError("no fmt chunk");
  if (dataLen === null) throw new WavFormatError("no data chunk");
  if (fmt.format !== 1) throw new WavFormatError(`not PCM (format ${fmt.format})`);
  const bytesPerFrame = (fmt.bits / 8) * fmt.channels;
  const frames = bytesPerFrame > 0 ? Math.floor(dataLen / bytesPerFrame) : 0;
  return {
    sampleRate: fmt.sampleRate,
    channels: fmt.channels,
    bitsPerSample: fmt.bits,
    frames,
    durationSeconds: fmt.sampleRate > 0 ? frames / fmt.sampleRate : 0,
  };
}

/** Parse and enforce the full upload contract. */
export function validateClip(bytes: Uint8Array): WavInfo {
  const info = parseWav(bytes);
  if (info.channels !== 1) throw new WavFormatError(`expected mono, got ${info.channels} channels`);
  if (info.sampleRate !== SAMPLE_RATE) {
    throw new WavFormatError(`expected ${SAMPLE_RATE} Hz, got ${info.sampleRate}`);
  }
  if (info.bitsPerSample !== 16) {
    throw new WavFormatError(`expected 16-bit samples, got ${info.bitsPerSample}`);
  }
  if (info.durationSeconds > MAX_CLIP_SECONDS) {
    throw new WavFormatError(`clip is ${info.durationSeconds.toFixed(2)}s, limit is ${MAX_CLIP_SECONDS}s`);
  }
  return info;
}

/** Pre-built silence for the microphone-denied manual control. */
export function silentClip(ms = 600): Uint8Array {
  const frames = Math.round((ms / 1000) * SAMPLE_RATE);
  return encodeWav(new Int16Array(frames));
}

/** Base64 for upload bodies; works in browser and node test runs. */
export function toBase64(bytes: Uint8Array): string {
  if (typeof btoa === "function") {
    let binary = "";
    const step = 0x8000;
    for (let i = 0; i < bytes.length; i += step) {
      binary += String.fromCharCode(...bytes.subarray(i, i + step));
    }
    return btoa(binary);
  }
  return Buffer.from(bytes).toString("base64");
}

export function fromBase64(text: string): Uint8Array {
  if (typeof atob === "function") {
    const binary = atob(text);
    const out = new Uint8Array(binary.length);
    for (let i = 0; i < binary.length; i++) out[i] = binary.charCodeAt(i);
    return out;
  }
  return new Uint8Array(Buffer.from(text, "base64"));
}
