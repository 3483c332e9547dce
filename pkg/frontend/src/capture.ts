import { SAMPLE_RATE, MAX_CLIP_SECONDS, encodeWav, floatTo16, resampleTo16k } from "./wav.js";

/** Anything that can produce one upload-ready WAV clip. */
export type ClipSource = () => Promise<Uint8Array>;

/**
 * Record from the microphone and hand back a contract-conforming WAV.
 *
 * MediaRecorder's compressed output is decoded through an AudioContext,
 * mixed down to mono, resampled to 16 kHz and re-encoded as PCM16, so
 * the server never sees browser-specific formats.
 */
export function microphoneSource(maxMs = MAX_CLIP_SECONDS * 1000): ClipSource {
  return async () => {
    const stream = await navigator.mediaDevices.getUserMedia({ audio: true });
    const recorder = new MediaRecorder(stream);
    const chunks: BlobPart[] = [];

    const blob = await new Promise<Blob>((resolve, reject) => {
      recorder.ondataavailable = (e) => {
        if (e.data && e.data.size > 0) chunks.push(e.data);
      };
      recorder.onstop = () => resolve(new Blob(chunks, { type: recorder.mimeType }));
      recorder.onerror = () => reject(new Error("recording failed"));
      recorder.start();
      setTimeout(() => {
        if (recorder.state !== "inactive") recorder.stop();
      }, maxMs);
    });

    stream.getTracks().forEach((track) => track.stop());
    return decodeToWav(await blob.arrayBuffer());
  };
}

async function decodeToWav(encoded: ArrayBuffer): Promise<Uint8Array> {
  const ctx = new AudioContext();
  try {
    const audio = await ctx.decodeAudioData(encoded);
    const mono = mixToMono(audio);
    const resampled = resampleTo16k(mono, audio.sampleRate);
    const capped = resampled.subarray(0, SAMPLE_RATE * MAX_CLIP_SECONDS);
    return encodeWav(floatTo16(new Float32Array(capped)));
  } finally {
    void ctx.close();
  }
}

function mixToMono(audio: AudioBuffer): Float32Array {
  if (audio.numberOfChannels === 1) return audio.getChannelData(0);
  const out = new Float32Array(audio.length);
  for (let c = 0; c < audio.numberOfChannels; c++) {
    const chan = audio.getChannelData(c);
    for (let i = 0; i < chan.length; i++) out[i] += chan[i] / audio.numberOfChannels;
  }
  return out;
}
