/** Gapless playback of streamed Float32 frames via the Web Audio clock.
 *
 * Each incoming frame becomes an AudioBuffer scheduled back-to-back on the
 * context clock.  A small lead (two frame lengths) absorbs network jitter;
 * if the clock overruns the schedule an underrun is counted and scheduling
 * restarts from "now + lead".
 */

export class FramePlayer {
  private ctx: AudioContext | null = null;
  private nextTime = 0;
  private _underruns = 0;
  private readonly sampleRate: number;
  private readonly leadSeconds: number;

  constructor(sampleRate: number, leadSeconds = 0.2) {
    this.sampleRate = sampleRate;
    this.leadSeconds = leadSeconds;
  }

  get underruns(): number {
    return this._underruns;
  }

  async resume(): Promise<void> {
    if (!this.ctx) {
      this.ctx = new AudioContext({ sampleRate: this.sampleRate });
    }
    if (this.ctx.state === "suspended") await this.ctx.resume();
    this.nextTime = 0;
  }

  async suspend(): Promise<void> {
    if (this.ctx && this.ctx.state === "running") await this.ctx.suspend();
    this.nextTime = 0;
  }

  enqueue(samples: Float32Array): void {
    const ctx = this.ctx;
    if (!ctx || ctx.state !== "running") return;
    const buf = ctx.createBuffer(1, samples.length, this.sampleRate);
    buf.copyToChannel(samples as Float32Array<ArrayBuffer>, 0);
    const src = ctx.createBufferSource();
    src.buffer = buf;
    src.connect(ctx.destination);
    const now = ctx.currentTime;
    if (this.nextTime <= now) {
      if (this.nextTime !== 0) this._underruns += 1;
      this.nextTime = now + this.leadSeconds;
    }
    src.start(this.nextTime);
    this.nextTime += samples.length / this.sampleRate;
  }
}
