// Editable scenario state behind the canvas editor. Dragging logic lives here,
// DOM-free, so it can be exercised directly in tests: a drag that ends in
// occupied space snaps back to the last valid position and reports a flag.

import { MapPayload, decodeCells, isFreeAtWorld } from "./transform.js";

export interface ObstacleDraft {
  kind: "pedestrian" | "vehicle" | "generic";
  radius: number;
  speed: number;
  start: [number, number];
  waypoints: [number, number][];
}

export const DEFAULT_RADIUS: Record<ObstacleDraft["kind"], number> = {
  pedestrian: 0.3,
  vehicle: 0.6,
  generic: 0.3,
};

export type HandleRef =
  | { kind: "start" }
  | { kind: "goal" }
  | { kind: "obstacle-start"; obstacle: number }
  | { kind: "waypoint"; obstacle: number; index: number };

export class ScenarioDraft {
  mapId: string;
  start: [number, number] = [1, 1];
  startTheta = 0;
  goal: [number, number] = [2, 2];
  obstacles: ObstacleDraft[] = [];

  private payload: MapPayload;
  private cells: Uint8Array;

  constructor(mapId: string, payload: MapPayload) {
    this.mapId = mapId;
    this.payload = payload;
    this.cells = decodeCells(payload);
  }

  isFree(x: number, y: number): boolean {
    return isFreeAtWorld(this.payload, this.cells, x, y);
  }

  getHandle(ref: HandleRef): [number, number] {
    switch (ref.kind) {
      case "start":
        return this.start;
      case "goal":
        return this.goal;
      case "obstacle-start":
        return this.obstacles[ref.obstacle].start;
      case "waypoint":
        return this.obstacles[ref.obstacle].waypoints[ref.index];
    }
  }

  /**
   * Move a handle to (x, y). Returns true when accepted; a target in occupied
   * space (or out of the map) leaves the handle where it was ("snap back").
   */
  moveHandle(ref: HandleRef, x: number, y: number): boolean {
    if (!this.isFree(x, y)) return false;
    const point: [number, number] = [x, y];
    switch (ref.kind) {
      case "start":
        this.start = point;
        break;
      case "goal":
        this.goal = point;
        break;
      case "obstacle-start":
        this.obstacles[ref.obstacle].start = point;
        break;
      case "waypoint":
        this.obstacles[ref.obstacle].waypoints[ref.index] = point;
        break;
    }
    return true;
  }

  addObstacle(kind: ObstacleDraft["kind"], at: [number, number]): ObstacleDraft {
    const obstacle: ObstacleDraft = {
      kind,
      radius: DEFAULT_RADIUS[kind],
      speed: 0.5,
      start: at,
      waypoints: [],
    };
    this.obstacles.push(obstacle);
    return obstacle;
  }

  addWaypoint(obstacle: number, at: [number, number]): void {
    this.obstacles[obstacle].waypoints.push(at);
  }

  removeObstacle(index: number): void {
    this.obstacles.splice(index, 1);
  }

  /** Server document payload (insertion order preserved). */
  toPayload() {
    return {
      map_id: this.mapId,
      robot_start: { x: this.start[0], y: this.start[1], theta: this.startTheta },
      robot_goal: [this.goal[0], this.goal[1]],
      obstacles: this.obstacles.map((o) => ({
        kind: o.kind,
        radius: o.radius,
        speed: o.speed,
        start: [o.start[0], o.start[1]],
        waypoints: o.waypoints.map((w) => [w[0], w[1]]),
      })),
    };
  }
}
