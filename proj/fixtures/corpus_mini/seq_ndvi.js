// Load a Landsat 8 scene and display its NDVI.
var img = ee.Image('LANDSAT/LC08/C01/T1_TOA/LC08_044034_20140318');
var ndvi = img.normalizedDifference(['B5', 'B4']);
Map.addLayer(ndvi, {min: 0, max: 1}, 'NDVI');
