import { describe, expect, it } from "vitest";

import {
  buildKnobSpecs,
  clampValue,
  formatKnobValue,
  isKnownParam,
  unscaleRaw,
} from "../src/knobs.js";
import type { ModelMetadata } from "../src/types.js";

const metaD1Z2: ModelMetadata = {
  condition: "D1_Z2_Y",
  n_latent: 1,
  n_cond: 2,
  params: [
    { name: "y0", kind: "cond", label: "pressure" },
    { name: "y1", kind: "cond", label: "position" },
    { name: "z0", kind: "latent", label: "z0" },
  ],
  corpus_hash: "abc",
  sample_rate: 48000,
};

const metaD2Z0: ModelMetadata = {
  condition: "D2_Z0_Y",
  n_latent: 2,
  n_cond: 0,
  params: [
    { name: "z0", kind: "latent", label: "z0" },
    { name: "z1", kind: "latent", label: "z1" },
  ],
  corpus_hash: "abc",
  sample_rate: 48000,
};

describe("clampValue", () => {
  it("passes in-range values through", () => {
    expect(clampValue(0.25)).toBe(0.25);
    expect(clampValue(-1)).toBe(-1);
    expect(clampValue(1)).toBe(1);
  });

  it("clamps out-of-range drags to ±1", () => {
    expect(clampValue(3.7)).toBe(1);
    expect(clampValue(-100)).toBe(-1);
  });

  it("maps NaN to 0", () => {
    expect(clampValue(Number.NaN)).toBe(0);
  });
});

describe("unscaleRaw", () => {
  it("maps the scaled range back to raw 0-128 units", () => {
    expect(unscaleRaw(-1)).toBe(0);
    expect(unscaleRaw(0)).toBe(64);
    expect(unscaleRaw(1)).toBe(128);
  });
});

describe("buildKnobSpecs", () => {
  it("renders three knobs for D1_Z2_Y with metadata labels", () => {
    const specs = buildKnobSpecs(metaD1Z2);
    expect(specs).toHaveLength(3);
    expect(specs.map((s) => s.name)).toEqual(["y0", "y1", "z0"]);
    expect(specs[0].title).toBe("pressure (y0)");
    expect(specs[1].title).toBe("position (y1)");
    expect(specs[2].title).toBe("z0");
  });

  it("renders two latent knobs for D2_Z0_Y", () => {
    const specs = buildKnobSpecs(metaD2Z0);
    expect(specs).toHaveLength(2);
    expect(specs.map((s) => s.name)).toEqual(["z0", "z1"]);
    expect(specs.every((s) => s.kind === "latent")).toBe(true);
  });

  it("shows the raw relabel only for conditional dims", () => {
    const specs = buildKnobSpecs(metaD1Z2);
    expect(specs.map((s) => s.showRaw)).toEqual([true, true, false]);
  });

  it("uses the full scaled range with a centered default", () => {
    for (const s of buildKnobSpecs(metaD1Z2)) {
      expect(s.min).toBe(-1);
      expect(s.max).toBe(1);
      expect(s.initial).toBe(0);
    }
  });

  it("rejects metadata whose param list disagrees with the dims", () => {
    const bad = { ...metaD1Z2, n_latent: 5 };
    expect(() => buildKnobSpecs(bad)).toThrow(/expected 7/);
  });
});

describe("formatKnobValue", () => {
  it("adds the raw label for y knobs", () => {
    const [y0, , z0] = buildKnobSpecs(metaD1Z2);
    expect(formatKnobValue(y0, 0.5)).toBe("0.50 (raw 96)");
    expect(formatKnobValue(z0, 0.5)).toBe("0.50");
  });
});

describe("isKnownParam", () => {
  it("accepts only names present in the metadata", () => {
    expect(isKnownParam(metaD1Z2, "y1")).toBe(true);
    expect(isKnownParam(metaD1Z2, "z0")).toBe(true);
    expect(isKnownParam(metaD1Z2, "z9")).toBe(false);
    expect(isKnownParam(metaD2Z0, "y0")).toBe(false);
  });
});
