import type { DegradeReport, DegradeResponse, SpectrumPayload } from "../src/types.js";

export function spectrumPayload(seedValue: number, bins = 32): SpectrumPayload {
  const centers = Array.from({ length: bins }, (_, i) => (i + 0.5) / bins);
  const power = centers.map((c, i) => Math.exp(-6 * c) * (1 + seedValue) + (i === 0 ? seedValue : 0));
  return {
    n_bins: bins,
    bin_centers: centers,
    power,
    band_fractions: { low: 0.9, mid: 0.09, high: 0.01 },
  };
}

export function degradeReport(tag: number): DegradeReport {
  return {
    params: {
      image: {
        t2: 0.08,
        te: 0.11,
        b0_strength: 0.035,
        b0_correlation: null,
        grad_coupling: 50,
        phase_scale: 1,
        coil_falloff: 0.7,
      },
      kspace: { target_snr: 8, rho: 0.5, r_accel: 2, center_fraction: 0.25, readout_axis: 0 },
      seed: tag,
    },
    achieved_fraction: 0.5,
    signal_power: 0.123 + tag,
    band_fractions_input: [0.9, 0.09, 0.01],
    band_fractions_output: [0.95, 0.04, 0.01],
  };
}

export function degradeResponse(id: string, cacheHit = false): DegradeResponse {
  return { result_id: id, cache_hit: cacheHit, report: degradeReport(0) };
}

export function deferred<T>(): { promise: Promise<T>; resolve: (v: T) => void; reject: (e: unknown) => void } {
  let resolve!: (v: T) => void;
  let reject!: (e: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}
