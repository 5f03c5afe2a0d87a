export { extract, listImages } from './extract.js'
export type { ExtractConfig, ExtractResult } from './extract.js'
export { makeBackbone, resizeBilinear } from './backbone.js'
export type { Backbone, EmbedFn } from './backbone.js'
export { decodePng, encodePng, PngError } from './png.js'
export type { RgbImage } from './png.js'
export { encodeFeatureFile, readFeatureFile, writeFeatureFile, digestOf } from './oodf.js'
export type { FeatureFile } from './oodf.js'
