// NDVI over a filtered collection via a mapped callback.
var col = ee.ImageCollection('LANDSAT/LC08/C01/T1_TOA')
    .filterBounds(ee.Geometry.Point(-122.262, 37.8719));
var withScore = col.map(function(image) {
  return image.normalizedDifference(['B5', 'B4']);
});
var mosaic = withScore.qualityMosaic('nd');
Map.addLayer(mosaic, {}, 'mosaic');
