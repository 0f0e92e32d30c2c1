/** Latest-value-wins message throttle.
 *
 * Rapid knob drags are coalesced so at most `maxPerSecond` messages per
 * parameter leave the UI; the newest value always wins and a trailing
 * flush guarantees the final value is sent.
 */

export type SendFn = (name: string, value: number) => void;

export class KnobThrottle {
  private readonly minIntervalMs: number;
  private readonly send: SendFn;
  private readonly now: () => number;
  private readonly schedule: (fn: () => void, ms: number) => void;
  private lastSent = new Map<string, number>();
  private pending = new Map<string, number>();
  private timerArmed = new Set<string>();

  constructor(
    send: SendFn,
    maxPerSecond = 30,
    now: () => number = () => Date.now(),
    schedule: (fn: () => void, ms: number) => void = (fn, ms) => {
      setTimeout(fn, ms);
    },
  ) {
    if (maxPerSecond <= 0) throw new Error("maxPerSecond must be positive");
    this.minIntervalMs = 1000 / maxPerSecond;
    this.send = send;
    this.now = now;
    this.schedule = schedule;
  }

  /** Called on every knob movement; sends now or coalesces. */
  update(name: string, value: number): void {
    const t = this.now();
    const last = this.lastSent.get(name);
    if (last === undefined || t - last >= this.minIntervalMs) {
      this.lastSent.set(name, t);
      this.pending.delete(name);
      this.send(name, value);
      return;
    }
    this.pending.set(name, value);
    if (!this.timerArmed.has(name)) {
      this.timerArmed.add(name);
      const wait = this.minIntervalMs - (t - last);
      this.schedule(() => this.flush(name), wait);
    }
  }

  /** Emit the newest coalesced value for `name`, if any. */
  flush(name: string): void {
    this.timerArmed.delete(name);
    const value = this.pending.get(name);
    if (value === undefined) return;
    this.pending.delete(name);
    this.lastSent.set(name, this.now());
    this.send(name, value);
  }
}
