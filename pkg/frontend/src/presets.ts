/**
 * Preset panel logic: list / save / delete presets on the service and
 * download exported batch-config fragments exactly as the service emits
 * them (the downloaded bytes are the response text, untouched).
 */

import { ApiClient } from "./api.js";
import type { DegradationParams, PresetInfo } from "./types.js";

export class PresetManager {
  private readonly api: ApiClient;
  presets: PresetInfo[] = [];

  constructor(api: ApiClient) {
    this.api = api;
  }

  async refresh(): Promise<PresetInfo[]> {
    this.presets = await this.api.listPresets();
    return this.presets;
  }

  async save(name: string, params: DegradationParams, seed: number, notes = ""): Promise<PresetInfo> {
    const created = await this.api.createPreset(name, params, seed, notes);
    await this.refresh();
    return created;
  }

  async remove(name: string): Promise<void> {
    await this.api.deletePreset(name);
    await this.refresh();
  }

  exportFragment(name: string): Promise<string> {
    return this.api.exportPreset(name);
  }

  /** Browser download of the exported fragment. */
  async download(name: string, doc: Document = document): Promise<void> {
    const text = await this.exportFragment(name);
    const blob = new Blob([text], { type: "application/json" });
    const url = URL.createObjectURL(blob);
    const anchor = doc.createElement("a");
    anchor.href = url;
    anchor.download = `${name}.config.json`;
    anchor.click();
    URL.revokeObjectURL(url);
  }
}
