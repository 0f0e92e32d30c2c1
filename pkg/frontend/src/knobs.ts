/** Knob specifications derived from model metadata (never hardcoded). */

import type { ModelMetadata, ParamDescriptor } from "./types.js";

export interface KnobSpec {
  name: string;
  kind: "cond" | "latent";
  /** Human-readable title, e.g. "pressure (y0)" or "z0". */
  title: string;
  min: number;
  max: number;
  initial: number;
  /** Whether to show the raw 0-128 relabeling next to the scaled value. */
  showRaw: boolean;
}

export function clampValue(v: number): number {
  if (Number.isNaN(v)) return 0;
  return Math.min(1, Math.max(-1, v));
}

/** Map a scaled [-1, 1] conditional value to raw 0-128 units. */
export function unscaleRaw(v: number): number {
  return (v + 1) * 64;
}

export function knobTitle(p: ParamDescriptor): string {
  return p.label === p.name ? p.name : `${p.label} (${p.name})`;
}

/** One knob per model dimension, in server order (y dims then z dims). */
export function buildKnobSpecs(meta: ModelMetadata): KnobSpec[] {
  const expected = meta.n_cond + meta.n_latent;
  if (meta.params.length !== expected) {
    throw new Error(
      `metadata lists ${meta.params.length} params, expected ${expected}`,
    );
  }
  return meta.params.map((p) => ({
    name: p.name,
    kind: p.kind,
    title: knobTitle(p),
    min: -1,
    max: 1,
    initial: 0,
    showRaw: p.kind === "cond",
  }));
}

/** Display string for a knob value: scaled plus optional raw relabel. */
export function formatKnobValue(spec: KnobSpec, v: number): string {
  const scaled = v.toFixed(2);
  if (!spec.showRaw) return scaled;
  return `${scaled} (raw ${unscaleRaw(v).toFixed(0)})`;
}

/** True when `name` exists in the metadata (the UI must never send others). */
export function isKnownParam(meta: ModelMetadata, name: string): boolean {
  return meta.params.some((p) => p.name === name);
}
