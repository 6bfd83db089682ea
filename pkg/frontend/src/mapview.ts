/** Debris map rendering. Points are projected through spherical Mercator so
 * they line up with standard web tiles when a tile server is configured;
 * with no tile server (surveys happen offline) the same scatter draws on a
 * blank canvas. */

import type { MapDocument, MapFeature } from "./types.js";

export interface Viewport {
  width: number;
  height: number;
  padding: number;
}

export interface PlottedPoint {
  x: number;
  y: number;
  recordId: string;
  label: string;
  color: string;
  clusterId: number | null;
}

export interface TilePlacement {
  url: string;
  x: number;
  y: number;
  size: number;
}

export interface Projection {
  toCanvas(lon: number, lat: number): { x: number; y: number };
  scale: number;
  worldX: number;
  worldY: number;
  zoomHint: number;
}

const TILE_SIZE = 256;
const MAX_TILE_ZOOM = 19;

/** Normalized world coordinates in [0, 1], lon/lat to spherical Mercator. */
export function mercator(lon: number, lat: number): { x: number; y: number } {
  const clamped = Math.max(-85.05112878, Math.min(85.05112878, lat));
  const phi = (clamped * Math.PI) / 180;
  return {
    x: (lon + 180) / 360,
    y: (1 - Math.log(Math.tan(phi) + 1 / Math.cos(phi)) / Math.PI) / 2,
  };
}

/** Fits the features' bounding box into the viewport, preserving aspect. */
export function fitProjection(features: MapFeature[], viewport: Viewport): Projection {
  const points = features.map((f) => mercator(f.geometry.coordinates[0], f.geometry.coordinates[1]));
  let minX = Math.min(...points.map((p) => p.x));
  let maxX = Math.max(...points.map((p) => p.x));
  let minY = Math.min(...points.map((p) => p.y));
  let maxY = Math.max(...points.map((p) => p.y));
  if (points.length === 0) {
    minX = minY = 0.4999;
    maxX = maxY = 0.5001;
  }
  // A lone point or a degenerate span still needs a finite scale.
  const minSpan = 1e-9;
  const spanX = Math.max(maxX - minX, minSpan);
  const spanY = Math.max(maxY - minY, minSpan);
  const usableW = viewport.width - 2 * viewport.padding;
  const usableH = viewport.height - 2 * viewport.padding;
  const scale = Math.min(usableW / spanX, usableH / spanY);
  const centerX = (minX + maxX) / 2;
  const centerY = (minY + maxY) / 2;
  const zoomHint = Math.min(
    MAX_TILE_ZOOM,
    Math.max(1, Math.floor(Math.log2(scale / TILE_SIZE))),
  );
  return {
    scale,
    worldX: centerX,
    worldY: centerY,
    zoomHint,
    toCanvas(lon: number, lat: number) {
      const world = mercator(lon, lat);
      return {
        x: viewport.width / 2 + (world.x - centerX) * scale,
        y: viewport.height / 2 + (world.y - centerY) * scale,
      };
    },
  };
}

export function plotFeatures(doc: MapDocument, viewport: Viewport): PlottedPoint[] {
  const projection = fitProjection(doc.features, viewport);
  return doc.features.map((feature) => {
    const { x, y } = projection.toCanvas(
      feature.geometry.coordinates[0],
      feature.geometry.coordinates[1],
    );
    return {
      x,
      y,
      recordId: feature.properties.record_id,
      label: feature.properties.label,
      color: feature.properties.color,
      clusterId: feature.properties.cluster_id,
    };
  });
}

export interface ClusterOutline {
  clusterId: number;
  x: number;
  y: number;
  radius: number;
}

/** One enclosing circle per cluster, sized to its farthest member. */
export function clusterOutlines(points: PlottedPoint[], minRadius = 18): ClusterOutline[] {
  const byCluster = new Map<number, PlottedPoint[]>();
  for (const point of points) {
    if (point.clusterId === null) {
      continue;
    }
    const members = byCluster.get(point.clusterId) ?? [];
    members.push(point);
    byCluster.set(point.clusterId, members);
  }
  const outlines: ClusterOutline[] = [];
  for (const [clusterId, members] of [...byCluster.entries()].sort((a, b) => a[0] - b[0])) {
    const cx = members.reduce((sum, p) => sum + p.x, 0) / members.length;
    const cy = members.reduce((sum, p) => sum + p.y, 0) / members.length;
    const spread = Math.max(...members.map((p) => Math.hypot(p.x - cx, p.y - cy)));
    outlines.push({ clusterId, x: cx, y: cy, radius: Math.max(minRadius, spread + 10) });
  }
  return outlines;
}

/** Tile draw list for the viewport; empty template means offline mode. */
export function tilePlacements(
  template: string,
  projection: Projection,
  viewport: Viewport,
): TilePlacement[] {
  if (!template.trim()) {
    return [];
  }
  const zoom = projection.zoomHint;
  const tiles = 2 ** zoom;
  const size = projection.scale / tiles;
  const placements: TilePlacement[] = [];
  const worldLeft = projection.worldX - viewport.width / 2 / projection.scale;
  const worldTop = projection.worldY - viewport.height / 2 / projection.scale;
  const firstCol = Math.floor(worldLeft * tiles);
  const firstRow = Math.floor(worldTop * tiles);
  const cols = Math.ceil(viewport.width / size) + 1;
  const rows = Math.ceil(viewport.height / size) + 1;
  for (let row = firstRow; row < firstRow + rows; row++) {
    for (let col = firstCol; col < firstCol + cols; col++) {
      if (row < 0 || row >= tiles) {
        continue;
      }
      const wrapped = ((col % tiles) + tiles) % tiles;
      placements.push({
        url: template
          .replace("{z}", String(zoom))
          .replace("{x}", String(wrapped))
          .replace("{y}", String(row)),
        x: viewport.width / 2 + (col / tiles - projection.worldX) * projection.scale,
        y: viewport.height / 2 + (row / tiles - projection.worldY) * projection.scale,
        size,
      });
    }
  }
  return placements;
}

export function drawScatter(
  canvas: HTMLCanvasElement,
  points: PlottedPoint[],
  outlines: ClusterOutline[],
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  ctx.save();
  ctx.setLineDash([6, 4]);
  ctx.strokeStyle = "#555";
  for (const outline of outlines) {
    ctx.beginPath();
    ctx.arc(outline.x, outline.y, outline.radius, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.fillStyle = "#555";
    ctx.font = "11px sans-serif";
    ctx.fillText(`cluster ${outline.clusterId}`, outline.x + outline.radius + 4, outline.y);
  }
  ctx.restore();
  for (const point of points) {
    ctx.beginPath();
    ctx.arc(point.x, point.y, 5, 0, 2 * Math.PI);
    ctx.fillStyle = point.color;
    ctx.fill();
    ctx.strokeStyle = "#ffffff";
    ctx.lineWidth = 1.5;
    ctx.stroke();
  }
}

/** Paints the base layer, then the scatter. Tile fetches that fail (offline,
 * bad template) are skipped silently and the blank background stays. */
export function renderMap(
  canvas: HTMLCanvasElement,
  doc: MapDocument,
  tileTemplate: string,
  padding = 40,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  const viewport: Viewport = { width: canvas.width, height: canvas.height, padding };
  ctx.fillStyle = "#e8eef2";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const points = plotFeatures(doc, viewport);
  const outlines = clusterOutlines(points);
  const paintOverlay = () => drawScatter(canvas, points, outlines);

  const projection = fitProjection(doc.features, viewport);
  const placements = tilePlacements(tileTemplate, projection, viewport);
  if (placements.length === 0) {
    paintOverlay();
    return;
  }
  let pending = placements.length;
  for (const placement of placements) {
    const tile = new Image();
    tile.crossOrigin = "anonymous";
    const done = () => {
      pending -= 1;
      if (pending === 0) {
        paintOverlay();
      }
    };
    tile.onload = () => {
      ctx.drawImage(tile, placement.x, placement.y, placement.size, placement.size);
      done();
    };
    tile.onerror = done;
    tile.src = placement.url;
  }
  // Draw the scatter immediately as well so slow tiles never hide the data.
  paintOverlay();
}
