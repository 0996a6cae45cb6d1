/**
 * A periodic field stepped on demand with adjustable hold and noise.
 */
export class Field {
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        FieldFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_field_free(ptr, 0);
    }
    /**
     * @param {number} steps
     */
    advance(steps) {
        wasm.field_advance(this.__wbg_ptr, steps);
    }
    /**
     * Row-major 0/1 cell states.
     * @returns {Uint8Array}
     */
    cells() {
        const ret = wasm.field_cells(this.__wbg_ptr);
        var v1 = getArrayU8FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 1, 1);
        return v1;
    }
    /**
     * Clears the field and drops a glider in the middle.
     */
    glider() {
        const ret = wasm.field_glider(this.__wbg_ptr);
        if (ret[1]) {
            throw takeFromExternrefTable0(ret[0]);
        }
    }
    /**
     * @returns {number}
     */
    liveCount() {
        const ret = wasm.field_liveCount(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @param {number} side
     * @param {bigint} seed
     */
    constructor(side, seed) {
        const ret = wasm.field_new(side, seed);
        if (ret[2]) {
            throw takeFromExternrefTable0(ret[1]);
        }
        this.__wbg_ptr = ret[0];
        FieldFinalization.register(this, this.__wbg_ptr, this);
        return this;
    }
    /**
     * Clears the field and fills it at `density`.
     * @param {number} density
     */
    randomize(density) {
        const ret = wasm.field_randomize(this.__wbg_ptr, density);
        if (ret[1]) {
            throw takeFromExternrefTable0(ret[0]);
        }
    }
    /**
     * @param {number} p_hold
     * @param {number} p_noise
     */
    setParams(p_hold, p_noise) {
        const ret = wasm.field_setParams(this.__wbg_ptr, p_hold, p_noise);
        if (ret[1]) {
            throw takeFromExternrefTable0(ret[0]);
        }
    }
    /**
     * @returns {number}
     */
    side() {
        const ret = wasm.field_side(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {bigint}
     */
    stepCount() {
        const ret = wasm.field_stepCount(this.__wbg_ptr);
        return BigInt.asUintN(64, ret);
    }
    /**
     * @param {number} row
     * @param {number} col
     */
    toggle(row, col) {
        wasm.field_toggle(this.__wbg_ptr, row, col);
    }
}
if (Symbol.dispose) Field.prototype[Symbol.dispose] = Field.prototype.free;

/**
 * Outcome of one gate trial.
 */
export class GateTrial {
    static __wrap(ptr) {
        const obj = Object.create(GateTrial.prototype);
        obj.__wbg_ptr = ptr;
        GateTrialFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        GateTrialFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_gatetrial_free(ptr, 0);
    }
    /**
     * @returns {number}
     */
    cover() {
        const ret = wasm.gatetrial_cover(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {number}
     */
    outputArea() {
        const ret = wasm.gatetrial_outputArea(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {boolean}
     */
    output() {
        const ret = wasm.gatetrial_output(this.__wbg_ptr);
        return ret !== 0;
    }
    /**
     * @returns {number}
     */
    side() {
        const ret = wasm.gatetrial_side(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @param {number} i
     * @returns {Uint8Array | undefined}
     */
    snapshotCells(i) {
        const ret = wasm.gatetrial_snapshotCells(this.__wbg_ptr, i);
        let v1;
        if (ret[0] !== 0) {
            v1 = getArrayU8FromWasm0(ret[0], ret[1]).slice();
            wasm.__wbindgen_free(ret[0], ret[1] * 1, 1);
        }
        return v1;
    }
    /**
     * @returns {number}
     */
    snapshotCount() {
        const ret = wasm.gatetrial_snapshotCount(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @param {number} i
     * @returns {bigint | undefined}
     */
    snapshotStep(i) {
        const ret = wasm.gatetrial_snapshotStep(this.__wbg_ptr, i);
        return ret[0] === 0 ? undefined : BigInt.asUintN(64, ret[1]);
    }
    /**
     * @returns {number}
     */
    threshold() {
        const ret = wasm.gatetrial_threshold(this.__wbg_ptr);
        return ret;
    }
}
if (Symbol.dispose) GateTrial.prototype[Symbol.dispose] = GateTrial.prototype.free;

/**
 * Success rates at porosities `lo, lo + step, ..., hi`, followed by the
 * fitted threshold (NaN when the fit fails).
 * @param {number} side
 * @param {number} trials
 * @param {number} lo
 * @param {number} hi
 * @param {number} step
 * @param {boolean} wrap
 * @param {bigint} seed
 * @returns {Float64Array}
 */
export function percolationCurve(side, trials, lo, hi, step, wrap, seed) {
    const ret = wasm.percolationCurve(side, trials, lo, hi, step, wrap, seed);
    if (ret[3]) {
        throw takeFromExternrefTable0(ret[2]);
    }
    var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
    wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
    return v1;
}

/**
 * Runs one gate trial with the standard geometry and `snapshots` evenly
 * spaced field captures.
 * @param {boolean} or
 * @param {boolean} a
 * @param {boolean} b
 * @param {number} p_noise
 * @param {bigint} seed
 * @param {number} trial
 * @param {number} snapshots
 * @returns {GateTrial}
 */
export function runGate(or, a, b, p_noise, seed, trial, snapshots) {
    const ret = wasm.runGate(or, a, b, p_noise, seed, trial, snapshots);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return GateTrial.__wrap(ret[0]);
}
function __wbg_get_imports() {
    const import0 = {
        __proto__: null,
        __wbg_Error_30c8987f7c2ed4e2: function(arg0, arg1) {
            const ret = Error(getStringFromWasm0(arg0, arg1));
            return ret;
        },
        __wbg___wbindgen_throw_41e9ee4f547fc59a: function(arg0, arg1) {
            throw new Error(getStringFromWasm0(arg0, arg1));
        },
        __wbindgen_init_externref_table: function() {
            const table = wasm.__wbindgen_externrefs;
            const offset = table.grow(4);
            table.set(0, undefined);
            table.set(offset + 0, undefined);
            table.set(offset + 1, null);
            table.set(offset + 2, true);
            table.set(offset + 3, false);
        },
    };
    return {
        __proto__: null,
        "./asyncgl_web_bg.js": import0,
    };
}

const FieldFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_field_free(ptr, 1));
const GateTrialFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_gatetrial_free(ptr, 1));

function getArrayF64FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getFloat64ArrayMemory0().subarray(ptr / 8, ptr / 8 + len);
}

function getArrayU8FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getUint8ArrayMemory0().subarray(ptr / 1, ptr / 1 + len);
}

let cachedFloat64ArrayMemory0 = null;
function getFloat64ArrayMemory0() {
    if (cachedFloat64ArrayMemory0 === null || cachedFloat64ArrayMemory0.byteLength === 0) {
        cachedFloat64ArrayMemory0 = new Float64Array(wasm.memory.buffer);
    }
    return cachedFloat64ArrayMemory0;
}

function getStringFromWasm0(ptr, len) {
    return decodeText(ptr >>> 0, len);
}

let cachedUint8ArrayMemory0 = null;
function getUint8ArrayMemory0() {
    if (cachedUint8ArrayMemory0 === null || cachedUint8ArrayMemory0.byteLength === 0) {
        cachedUint8ArrayMemory0 = new Uint8Array(wasm.memory.buffer);
    }
    return cachedUint8ArrayMemory0;
}

function takeFromExternrefTable0(idx) {
    const value = wasm.__wbindgen_externrefs.get(idx);
    wasm.__externref_table_dealloc(idx);
    return value;
}

let cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
cachedTextDecoder.decode();
const MAX_SAFARI_DECODE_BYTES = 2146435072;
let numBytesDecoded = 0;
function decodeText(ptr, len) {
    numBytesDecoded += len;
    if (numBytesDecoded >= MAX_SAFARI_DECODE_BYTES) {
        cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
        cachedTextDecoder.decode();
        numBytesDecoded = len;
    }
    return cachedTextDecoder.decode(getUint8ArrayMemory0().subarray(ptr, ptr + len));
}

let wasmModule, wasmInstance, wasm;
function __wbg_finalize_init(instance, module) {
    wasmInstance = instance;
    wasm = instance.exports;
    wasmModule = module;
    cachedFloat64ArrayMemory0 = null;
    cachedUint8ArrayMemory0 = null;
    wasm.__wbindgen_start();
    return wasm;
}

async function __wbg_load(module, imports) {
    if (typeof Response === 'function' && module instanceof Response) {
        if (!module.ok) {
            throw new Error(`failed to fetch Wasm: ${module.status} ${module.statusText} fetching '${module.url}'`);
        }

        if (typeof WebAssembly.instantiateStreaming === 'function') {
            try {
                return await WebAssembly.instantiateStreaming(module, imports);
            } catch (e) {
                const validResponse = expectedResponseType(module.type);

                if (validResponse && module.headers.get('Content-Type') !== 'application/wasm') {
                    console.warn("`WebAssembly.instantiateStreaming` failed because your server does not serve Wasm with `application/wasm` MIME type. Falling back to `WebAssembly.instantiate` which is slower. Original error:\n", e);

                } else { throw e; }
            }
        }

        const bytes = await module.arrayBuffer();
        return await WebAssembly.instantiate(bytes, imports);
    } else {
        const instance = await WebAssembly.instantiate(module, imports);

        if (instance instanceof WebAssembly.Instance) {
            return { instance, module };
        } else {
            return instance;
        }
    }

    function expectedResponseType(type) {
        switch (type) {
            case 'basic': case 'cors': case 'default': return true;
        }
        return false;
    }
}

function initSync(module) {
    if (wasm !== undefined) return wasm;


    if (module !== undefined) {
        if (Object.getPrototypeOf(module) === Object.prototype) {
            ({module} = module)
        } else {
            console.warn('using deprecated parameters for `initSync()`; pass a single object instead')
        }
    }

    const imports = __wbg_get_imports();
    if (!(module instanceof WebAssembly.Module)) {
        module = new WebAssembly.Module(module);
    }
    const instance = new WebAssembly.Instance(module, imports);
    return __wbg_finalize_init(instance, module);
}

async function __wbg_init(module_or_path) {
    if (wasm !== undefined) return wasm;


    if (module_or_path !== undefined) {
        if (Object.getPrototypeOf(module_or_path) === Object.prototype) {
            ({module_or_path} = module_or_path)
        } else {
            console.warn('using deprecated parameters for the initialization function; pass a single object instead')
        }
    }

    if (module_or_path === undefined) {
        module_or_path = new URL('asyncgl_web_bg.wasm', import.meta.url);
    }
    const imports = __wbg_get_imports();

    if (typeof module_or_path === 'string' || (typeof Request === 'function' && module_or_path instanceof Request) || (typeof URL === 'function' && module_or_path instanceof URL)) {
        module_or_path = fetch(module_or_path);
    }

    const { instance, module } = await __wbg_load(await module_or_path, imports);

    return __wbg_finalize_init(instance, module);
}

export { initSync, __wbg_init as default };
