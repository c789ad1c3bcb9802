// World-meter <-> canvas-pixel transforms shared by the map preview and the
// scenario editor. Canvas y grows downward; world y grows upward.

export interface MapPayload {
  width: number; // cells
  height: number;
  resolution: number; // m/cell
  origin: number[]; // [x, y, theta]
  cells_b64: string;
}

export interface Viewport {
  canvasWidth: number;
  canvasHeight: number;
  metersWidth: number;
  metersHeight: number;
  originX: number; // world coords of the map corner
  originY: number;
  scale: number; // px per meter (uniform)
}

export function fitViewport(payload: MapPayload, canvasWidth: number, canvasHeight: number): Viewport {
  const metersWidth = payload.width * payload.resolution;
  const metersHeight = payload.height * payload.resolution;
  const scale = Math.min(canvasWidth / metersWidth, canvasHeight / metersHeight);
  return {
    canvasWidth,
    canvasHeight,
    metersWidth,
    metersHeight,
    originX: payload.origin?.[0] ?? 0,
    originY: payload.origin?.[1] ?? 0,
    scale,
  };
}

export function worldToCanvas(v: Viewport, x: number, y: number): [number, number] {
  return [(x - v.originX) * v.scale, v.canvasHeight - (y - v.originY) * v.scale];
}

export function canvasToWorld(v: Viewport, px: number, py: number): [number, number] {
  return [px / v.scale + v.originX, (v.canvasHeight - py) / v.scale + v.originY];
}

export function decodeCells(payload: MapPayload): Uint8Array {
  const raw = atob(payload.cells_b64);
  const cells = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) cells[i] = raw.charCodeAt(i);
  return cells;
}

export const FREE_MIN = 250;
export const OCCUPIED_MAX = 50;

export function cellAtWorld(payload: MapPayload, cells: Uint8Array, x: number, y: number): number | null {
  const col = Math.floor((x - (payload.origin?.[0] ?? 0)) / payload.resolution);
  const row = Math.floor((y - (payload.origin?.[1] ?? 0)) / payload.resolution);
  if (row < 0 || row >= payload.height || col < 0 || col >= payload.width) return null;
  return cells[row * payload.width + col];
}

export function isFreeAtWorld(payload: MapPayload, cells: Uint8Array, x: number, y: number): boolean {
  const value = cellAtWorld(payload, cells, x, y);
  return value !== null && value >= FREE_MIN;
}

/** Paint the occupancy grid into an ImageData-compatible RGBA buffer. */
export function rasterize(payload: MapPayload, cells: Uint8Array): Uint8ClampedArray {
  const out = new Uint8ClampedArray(payload.width * payload.height * 4);
  for (let row = 0; row < payload.height; row++) {
    for (let col = 0; col < payload.width; col++) {
      const v = cells[row * payload.width + col];
      // canvas row 0 is the top; world row 0 is the bottom
      const target = ((payload.height - 1 - row) * payload.width + col) * 4;
      let shade: number;
      if (v >= FREE_MIN) shade = 255;
      else if (v <= OCCUPIED_MAX) shade = 40;
      else shade = 150; // unknown band
      out[target] = out[target + 1] = out[target + 2] = shade;
      out[target + 3] = 255;
    }
  }
  return out;
}
