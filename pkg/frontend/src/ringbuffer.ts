/** Fixed-capacity sample ring buffer feeding the scope views. */

export class SampleRing {
  private readonly buf: Float32Array;
  private writePos = 0;
  private filled = 0;

  constructor(capacity: number) {
    if (capacity <= 0 || !Number.isInteger(capacity)) {
      throw new Error("capacity must be a positive integer");
    }
    this.buf = new Float32Array(capacity);
  }

  get capacity(): number {
    return this.buf.length;
  }

  /** Number of valid samples currently stored (<= capacity). */
  get size(): number {
    return this.filled;
  }

  write(samples: Float32Array | number[]): void {
    for (let i = 0; i < samples.length; i++) {
      this.buf[this.writePos] = samples[i] as number;
      this.writePos = (this.writePos + 1) % this.buf.length;
    }
    this.filled = Math.min(this.filled + samples.length, this.buf.length);
  }

  /** The most recent n samples, oldest first.  n must be <= size. */
  latest(n: number): Float32Array {
    if (n > this.filled) {
      throw new Error(`only ${this.filled} samples available, asked ${n}`);
    }
    const out = new Float32Array(n);
    let pos = (this.writePos - n + this.buf.length * 2) % this.buf.length;
    for (let i = 0; i < n; i++) {
      out[i] = this.buf[pos];
      pos = (pos + 1) % this.buf.length;
    }
    return out;
  }
}
