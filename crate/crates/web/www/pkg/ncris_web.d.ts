/* tslint:disable */
/* eslint-disable */

export function dopplerProfile(speed_kmh: number, max_lag: number, streams: number, seed: number): Float64Array;

export function efficiencyGrid(elements: Uint32Array, speeds_kmh: Float64Array, calibration: number): Float64Array;

export function sinrCurve(antennas: number, elements: number, px_from: number, px_to: number, points: number): Float64Array;

export function sinrPoint(antennas: number, elements: number, px_dbw: number, seed: number): number;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly dopplerProfile: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly efficiencyGrid: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly sinrCurve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly sinrPoint: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
