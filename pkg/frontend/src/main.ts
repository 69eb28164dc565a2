/**
 * DOM wiring for the tuning dashboard: sliders drive debounced commits,
 * the controller renders into the slice panes, spectrum chart, report
 * panel, and preset list.
 */

import { ApiClient, ApiError } from "./api.js";
import { debounce } from "./debounce.js";
import { PresetManager } from "./presets.js";
import { SlicePane } from "./slice-viewer.js";
import { ChartSeries, SpectrumChart } from "./spectrum-chart.js";
import { TuningController, TuningState } from "./state.js";
import { clampToDocumentedBounds } from "./types.js";
import type { SliceAxis } from "./types.js";

const COMMIT_DEBOUNCE_MS = 250;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

interface SliderSpec {
  id: string;
  group: "image" | "kspace";
  field: string;
  parse?: (raw: number) => number | null;
}

const SLIDERS: SliderSpec[] = [
  { id: "t2", group: "image", field: "t2" },
  { id: "te", group: "image", field: "te" },
  { id: "b0-strength", group: "image", field: "b0_strength" },
  { id: "coil-falloff", group: "image", field: "coil_falloff" },
  { id: "rho", group: "kspace", field: "rho" },
  { id: "center-fraction", group: "kspace", field: "center_fraction" },
  { id: "r-accel", group: "kspace", field: "r_accel", parse: (v) => Math.round(v) },
  // slider at max = noise off (null SNR)
  { id: "target-snr", group: "kspace", field: "target_snr", parse: (v) => (v >= 50 ? null : v) },
];

function main(): void {
  const api = new ApiClient("");
  const controller = new TuningController(api);
  const presets = new PresetManager(api);

  const originalPane = new SlicePane(el<HTMLCanvasElement>("original-slice"));
  const resultPane = new SlicePane(el<HTMLCanvasElement>("result-slice"));
  const chart = new SpectrumChart(el<HTMLCanvasElement>("spectrum-chart"));

  const banner = el<HTMLDivElement>("error-banner");
  const cacheBadge = el<HTMLSpanElement>("cache-badge");
  const reportPanel = el<HTMLPreElement>("report-panel");
  const comparePanel = el<HTMLPreElement>("compare-panel");
  const sliceIndexInput = el<HTMLInputElement>("slice-index");

  const commitDebounced = debounce(
    (patch: Parameters<TuningController["commit"]>[0]) => void controller.commit(patch),
    COMMIT_DEBOUNCE_MS,
  );

  for (const spec of SLIDERS) {
    const input = el<HTMLInputElement>(spec.id);
    const label = el<HTMLSpanElement>(`${spec.id}-value`);
    const patchFor = () => {
      const raw = Number(input.value);
      const parsed = spec.parse ? spec.parse(raw) : raw;
      const value = clampToDocumentedBounds(spec.field, parsed, controller.state.allowOutOfRange);
      if (value !== parsed) input.value = String(value); // snap widget back into bounds
      label.textContent = value === null ? "off" : String(value);
      return { params: { [spec.group]: { [spec.field]: value } } } as Parameters<
        TuningController["commit"]
      >[0];
    };
    // drag: debounced commits; release/keyboard: immediate commit
    input.addEventListener("input", () => commitDebounced(patchFor()));
    input.addEventListener("change", () => {
      commitDebounced.cancel();
      void controller.commit(patchFor());
    });
  }

  el<HTMLInputElement>("seed").addEventListener("change", (ev) => {
    void controller.commit({ seed: Number((ev.target as HTMLInputElement).value) });
  });
  el<HTMLInputElement>("allow-out-of-range").addEventListener("change", (ev) => {
    void controller.commit({ allowOutOfRange: (ev.target as HTMLInputElement).checked });
  });

  el<HTMLInputElement>("volume-file").addEventListener("change", async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (file) void controller.loadVolume(await file.arrayBuffer());
  });
  el<HTMLInputElement>("reference-file").addEventListener("change", async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (file) void controller.loadReference(await file.arrayBuffer());
  });

  el<HTMLSelectElement>("slice-axis").addEventListener("change", (ev) => {
    controller.setSlice((ev.target as HTMLSelectElement).value as SliceAxis, controller.state.sliceIndex);
  });
  sliceIndexInput.addEventListener("input", (ev) => {
    controller.setSlice(controller.state.sliceAxis, Number((ev.target as HTMLInputElement).value));
  });
  el<HTMLSelectElement>("bins").addEventListener("change", (ev) => {
    void controller.setBins(Number((ev.target as HTMLSelectElement).value));
  });
  el<HTMLButtonElement>("compare-btn").addEventListener("click", () => void controller.compare());

  const presetList = el<HTMLUListElement>("preset-list");
  const renderPresets = () => {
    presetList.replaceChildren(
      ...presets.presets.map((preset) => {
        const li = document.createElement("li");
        const title = document.createElement("span");
        title.textContent = preset.name;
        const exportBtn = document.createElement("button");
        exportBtn.textContent = "export";
        exportBtn.addEventListener("click", () => void presets.download(preset.name));
        const deleteBtn = document.createElement("button");
        deleteBtn.textContent = "delete";
        deleteBtn.addEventListener("click", async () => {
          try {
            await presets.remove(preset.name);
          } catch (err) {
            banner.textContent = err instanceof ApiError ? err.detail : String(err);
          }
          renderPresets();
        });
        li.append(title, exportBtn, deleteBtn);
        return li;
      }),
    );
  };
  el<HTMLButtonElement>("preset-save").addEventListener("click", async () => {
    const name = el<HTMLInputElement>("preset-name").value.trim();
    if (!name) return;
    try {
      await presets.save(name, controller.state.params, controller.state.seed);
      banner.textContent = "";
    } catch (err) {
      banner.textContent = err instanceof ApiError ? err.detail : String(err);
    }
    renderPresets();
  });
  void presets.refresh().then(renderPresets);

  const render = (state: TuningState) => {
    banner.textContent = state.error ?? "";
    banner.hidden = !state.error;
    cacheBadge.hidden = !state.cacheHit;
    sliceIndexInput.max = String(Math.max(controller.axisLength() - 1, 0));
    sliceIndexInput.value = String(state.sliceIndex);

    const originalUrl = controller.originalSliceUrl();
    if (originalUrl) void originalPane.load(originalUrl);
    const resultUrl = controller.resultSliceUrl();
    if (resultUrl) void resultPane.load(resultUrl);
    else resultPane.clear();

    const series: ChartSeries[] = [];
    if (state.originalSpectrum) {
      series.push({ label: "original", color: "#4dc3ff", payload: state.originalSpectrum });
    }
    if (state.resultSpectrum) {
      series.push({ label: "degraded", color: "#ffb347", payload: state.resultSpectrum });
    }
    if (state.referenceSpectrum) {
      series.push({ label: "reference", color: "#9bd45e", payload: state.referenceSpectrum });
    }
    chart.draw(series);

    if (state.report) {
      const bands = state.report.band_fractions_output.map((f) => f.toExponential(3)).join("  ");
      reportPanel.textContent =
        `result: ${state.resultId}\n` +
        `achieved fraction: ${state.report.achieved_fraction.toFixed(4)}\n` +
        `band fractions (low mid high): ${bands}`;
    } else {
      reportPanel.textContent = "no result yet";
    }
    comparePanel.textContent = state.comparison
      ? `vs reference ${state.comparison.reference_volume_id}\n` +
        `delta low:  ${state.comparison.band_deltas.low.toExponential(3)}\n` +
        `delta mid:  ${state.comparison.band_deltas.mid.toExponential(3)}\n` +
        `delta high: ${state.comparison.band_deltas.high.toExponential(3)}\n` +
        `L1 distance: ${state.comparison.l1_distance.toExponential(3)}`
      : "";
  };

  controller.subscribe(render);
  render(controller.state);
}

document.addEventListener("DOMContentLoaded", main);
