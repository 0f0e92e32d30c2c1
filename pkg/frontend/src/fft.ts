/** Minimal radix-2 FFT for the spectrum view (dependency-free). */

export function isPowerOfTwo(n: number): boolean {
  return Number.isInteger(n) && n > 0 && (n & (n - 1)) === 0;
}

/** In-place iterative radix-2 FFT over (re, im); length must be 2^k. */
export function fft(re: Float64Array, im: Float64Array): void {
  const n = re.length;
  if (n !== im.length || !isPowerOfTwo(n)) {
    throw new Error("fft needs matching power-of-two arrays");
  }
  // bit-reversal permutation
  for (let i = 1, j = 0; i < n; i++) {
    let bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      [re[i], re[j]] = [re[j], re[i]];
      [im[i], im[j]] = [im[j], im[i]];
    }
  }
  for (let len = 2; len <= n; len <<= 1) {
    const ang = (-2 * Math.PI) / len;
    const wr = Math.cos(ang);
    const wi = Math.sin(ang);
    for (let i = 0; i < n; i += len) {
      let cr = 1;
      let ci = 0;
      for (let k = 0; k < len / 2; k++) {
        const ur = re[i + k];
        const ui = im[i + k];
        const vr = re[i + k + len / 2] * cr - im[i + k + len / 2] * ci;
        const vi = re[i + k + len / 2] * ci + im[i + k + len / 2] * cr;
        re[i + k] = ur + vr;
        im[i + k] = ui + vi;
        re[i + k + len / 2] = ur - vr;
        im[i + k + len / 2] = ui - vi;
        const ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

/**
 * Hann-windowed, zero-padded magnitude spectrum.  Returns fftSize/2 bins;
 * bin b covers frequency b * sampleRate / fftSize.
 */
export function magnitudeSpectrum(
  samples: Float32Array | number[],
  fftSize = 8192,
): Float64Array {
  if (!isPowerOfTwo(fftSize)) throw new Error("fftSize must be 2^k");
  const n = Math.min(samples.length, fftSize);
  const re = new Float64Array(fftSize);
  const im = new Float64Array(fftSize);
  for (let i = 0; i < n; i++) {
    const w = 0.5 - 0.5 * Math.cos((2 * Math.PI * i) / (n - 1));
    re[i] = (samples[i] as number) * w;
  }
  fft(re, im);
  const mags = new Float64Array(fftSize / 2);
  for (let b = 0; b < mags.length; b++) {
    mags[b] = Math.hypot(re[b], im[b]);
  }
  return mags;
}

/** Index of the largest non-DC bin. */
export function peakBin(mags: Float64Array): number {
  let best = 1;
  for (let b = 2; b < mags.length; b++) {
    if (mags[b] > mags[best]) best = b;
  }
  return best;
}

export function binToHz(
  bin: number,
  fftSize: number,
  sampleRate: number,
): number {
  return (bin * sampleRate) / fftSize;
}

export function hzToBin(
  hz: number,
  fftSize: number,
  sampleRate: number,
): number {
  return (hz * fftSize) / sampleRate;
}
