/** Canvas waveform and spectrum views over the incoming sample stream. */

import { magnitudeSpectrum } from "./fft.js";
import { SampleRing } from "./ringbuffer.js";

export const WAVEFORM_SAMPLES = 201;
export const SPECTRUM_SAMPLES = 4800;
export const FFT_SIZE = 8192;
export const REFRESH_HZ = 15;

export class ScopeViews {
  private readonly ring: SampleRing;
  private readonly waveCtx: CanvasRenderingContext2D;
  private readonly specCtx: CanvasRenderingContext2D;
  private readonly sampleRate: number;
  private timer: number | null = null;
  private dirty = false;

  constructor(
    waveCanvas: HTMLCanvasElement,
    specCanvas: HTMLCanvasElement,
    sampleRate: number,
  ) {
    this.ring = new SampleRing(SPECTRUM_SAMPLES * 2);
    this.waveCtx = waveCanvas.getContext("2d")!;
    this.specCtx = specCanvas.getContext("2d")!;
    this.sampleRate = sampleRate;
  }

  push(samples: Float32Array): void {
    this.ring.write(samples);
    this.dirty = true;
  }

  /** Redraw at REFRESH_HZ while samples keep arriving; idle otherwise. */
  start(): void {
    if (this.timer !== null) return;
    this.timer = window.setInterval(() => {
      if (!this.dirty) return;
      this.dirty = false;
      this.draw();
    }, 1000 / REFRESH_HZ);
  }

  stop(): void {
    if (this.timer !== null) {
      window.clearInterval(this.timer);
      this.timer = null;
    }
  }

  draw(): void {
    this.drawWaveform();
    this.drawSpectrum();
  }

  private drawWaveform(): void {
    const ctx = this.waveCtx;
    const { width: w, height: h } = ctx.canvas;
    ctx.fillStyle = "#111418";
    ctx.fillRect(0, 0, w, h);
    const n = Math.min(WAVEFORM_SAMPLES, this.ring.size);
    if (n < 2) return;
    const samples = this.ring.latest(n);
    let peak = 1e-6;
    for (let i = 0; i < n; i++) peak = Math.max(peak, Math.abs(samples[i]));
    const scale = Math.max(peak, 0.05);
    ctx.strokeStyle = "#e04848";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    for (let i = 0; i < n; i++) {
      const x = (i / (n - 1)) * w;
      const y = h / 2 - (samples[i] / scale) * (h / 2 - 4);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    }
    ctx.stroke();
  }

  private drawSpectrum(): void {
    const ctx = this.specCtx;
    const { width: w, height: h } = ctx.canvas;
    ctx.fillStyle = "#111418";
    ctx.fillRect(0, 0, w, h);
    const n = Math.min(SPECTRUM_SAMPLES, this.ring.size);
    if (n < 16) return;
    const mags = magnitudeSpectrum(this.ring.latest(n), FFT_SIZE);
    // show 0..6 kHz, log magnitude
    const maxBin = Math.min(
      mags.length,
      Math.floor((6000 * FFT_SIZE) / this.sampleRate),
    );
    let top = 1e-9;
    for (let b = 1; b < maxBin; b++) top = Math.max(top, mags[b]);
    const floorDb = -80;
    ctx.strokeStyle = "#48a0e0";
    ctx.lineWidth = 1;
    ctx.beginPath();
    for (let b = 1; b < maxBin; b++) {
      const db = 20 * Math.log10(mags[b] / top + 1e-12);
      const frac = Math.max(0, 1 - db / floorDb);
      const x = (b / maxBin) * w;
      const y = h - frac * (h - 4);
      if (b === 1) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    }
    ctx.stroke();
  }
}
