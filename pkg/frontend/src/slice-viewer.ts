/**
 * Side-by-side slice panes. The service delivers slices as PNGs windowed
 * to its default percentile range; the user's display window override is
 * a pure client-side gray remap and never triggers a re-request.
 */

/** Remap 8-bit grays through a [lo, hi] display window (units: fraction of
 * the incoming gray range). Pure function; exercised directly by tests. */
export function applyWindowToGray(gray: Uint8ClampedArray, lo: number, hi: number): Uint8ClampedArray {
  const out = new Uint8ClampedArray(gray.length);
  const span = hi - lo;
  for (let i = 0; i < gray.length; i++) {
    const t = span <= 0 ? 0 : ((gray[i] ?? 0) / 255 - lo) / span;
    out[i] = Math.round(Math.max(0, Math.min(1, t)) * 255);
  }
  return out;
}

export class SlicePane {
  private readonly canvas: HTMLCanvasElement;
  private readonly ctx: CanvasRenderingContext2D;
  private image: HTMLImageElement | null = null;
  private windowLo = 0;
  private windowHi = 1;

  constructor(canvas: HTMLCanvasElement) {
    this.canvas = canvas;
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2D canvas context unavailable");
    this.ctx = ctx;
  }

  /** Load a slice URL; resolves once drawn. */
  load(url: string): Promise<void> {
    return new Promise((resolve, reject) => {
      const img = new Image();
      img.onload = () => {
        this.image = img;
        this.redraw();
        resolve();
      };
      img.onerror = () => reject(new Error(`failed to load slice ${url}`));
      img.src = url;
    });
  }

  setWindow(lo: number, hi: number): void {
    this.windowLo = lo;
    this.windowHi = hi;
    this.redraw();
  }

  clear(): void {
    this.image = null;
    this.ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
  }

  private redraw(): void {
    if (!this.image) return;
    const { width, height } = this.canvas;
    this.ctx.clearRect(0, 0, width, height);
    this.ctx.imageSmoothingEnabled = false;
    this.ctx.drawImage(this.image, 0, 0, width, height);
    if (this.windowLo !== 0 || this.windowHi !== 1) {
      const frame = this.ctx.getImageData(0, 0, width, height);
      const px = frame.data;
      const grays = new Uint8ClampedArray(px.length / 4);
      for (let i = 0; i < grays.length; i++) grays[i] = px[4 * i] ?? 0;
      const mapped = applyWindowToGray(grays, this.windowLo, this.windowHi);
      for (let i = 0; i < grays.length; i++) {
        const g = mapped[i] ?? 0;
        px[4 * i] = g;
        px[4 * i + 1] = g;
        px[4 * i + 2] = g;
      }
      this.ctx.putImageData(frame, 0, 0);
    }
  }
}
