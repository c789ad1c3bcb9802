// Client-side mirror of the server's network shape propagation so the editor
// can flag dimension breaks inline, at the exact module, while typing. The
// server remains the authority at save time.

export type NetModule =
  | { type: "linear"; in_features: number; out_features: number; bias: boolean }
  | { type: "conv1d"; in_channels: number; out_channels: number; kernel_size: number; stride: number }
  | { type: "relu" };

export interface ShapeIssue {
  moduleIndex: number;
  message: string;
}

type Shape = { kind: "flat"; size: number } | { kind: "conv"; channels: number; length: number };

export function defaultModule(): NetModule {
  // a freshly added module starts as a linear layer
  return { type: "linear", in_features: 1, out_features: 1, bias: true };
}

function flatSize(s: Shape): number {
  return s.kind === "flat" ? s.size : s.channels * s.length;
}

/** Propagate shapes; returns the first issue plus the per-module output sizes. */
export function checkArchitecture(
  modules: NetModule[], obsDim: number, actionDim: number,
): { issue: ShapeIssue | null; outputSizes: string[] } {
  const outputSizes: string[] = [];
  if (modules.length === 0) {
    return { issue: { moduleIndex: -1, message: "add at least one module" }, outputSizes };
  }
  let shape: Shape = { kind: "flat", size: obsDim };
  for (let i = 0; i < modules.length; i++) {
    const m = modules[i];
    if (m.type === "linear") {
      if (m.in_features < 1 || m.out_features < 1) {
        return { issue: { moduleIndex: i, message: "features must be at least 1" }, outputSizes };
      }
      const need = flatSize(shape);
      if (m.in_features !== need) {
        return {
          issue: { moduleIndex: i, message: `in_features must be ${need} here` },
          outputSizes,
        };
      }
      shape = { kind: "flat", size: m.out_features };
    } else if (m.type === "conv1d") {
      if (m.in_channels < 1 || m.out_channels < 1 || m.kernel_size < 1 || m.stride < 1) {
        return { issue: { moduleIndex: i, message: "conv parameters must be at least 1" }, outputSizes };
      }
      const channels: number = shape.kind === "flat" ? 1 : shape.channels;
      const length: number = shape.kind === "flat" ? shape.size : shape.length;
      if (m.in_channels !== channels) {
        return {
          issue: { moduleIndex: i, message: `in_channels must be ${channels} here` },
          outputSizes,
        };
      }
      if (m.kernel_size > length) {
        return {
          issue: { moduleIndex: i, message: `kernel_size exceeds input length ${length}` },
          outputSizes,
        };
      }
      const outLen: number = Math.floor((length - m.kernel_size) / m.stride) + 1;
      shape = { kind: "conv", channels: m.out_channels, length: outLen };
    }
    // relu preserves the shape
    outputSizes.push(
      shape.kind === "flat" ? `${shape.size}` : `${shape.channels}x${shape.length}`,
    );
  }
  const finalSize = flatSize(shape);
  if (finalSize !== actionDim) {
    return {
      issue: {
        moduleIndex: modules.length - 1,
        message: `network outputs ${finalSize} values but the robot needs ${actionDim}`,
      },
      outputSizes,
    };
  }
  return { issue: null, outputSizes };
}
