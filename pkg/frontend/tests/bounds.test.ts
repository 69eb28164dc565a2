import { describe, expect, it } from "vitest";

import { clampToDocumentedBounds, PARAM_BOUNDS } from "../src/types.js";

describe("clampToDocumentedBounds", () => {
  it("clamps sampled parameters into their documented ranges", () => {
    expect(clampToDocumentedBounds("rho", 0.1, false)).toBe(PARAM_BOUNDS.rho[0]);
    expect(clampToDocumentedBounds("rho", 1.0, false)).toBe(PARAM_BOUNDS.rho[1]);
    expect(clampToDocumentedBounds("t2", 0.08, false)).toBe(0.08);
    expect(clampToDocumentedBounds("r_accel", 1, false)).toBe(2);
    expect(clampToDocumentedBounds("r_accel", 4, false)).toBe(3);
  });

  it("passes everything through when the override toggle is on", () => {
    expect(clampToDocumentedBounds("rho", 0.1, true)).toBe(0.1);
    expect(clampToDocumentedBounds("target_snr", null, true)).toBeNull();
  });

  it("treats noise-off as out-of-range without the override", () => {
    expect(clampToDocumentedBounds("target_snr", null, false)).toBe(PARAM_BOUNDS.target_snr[1]);
  });

  it("leaves fixed constants untouched", () => {
    expect(clampToDocumentedBounds("coil_falloff", 0.0, false)).toBe(0.0);
    expect(clampToDocumentedBounds("phase_scale", 3.0, false)).toBe(3.0);
  });
});
